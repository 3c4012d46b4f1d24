#pragma once

#include <memory>
#include <string>
#include <vector>

#include "flare/errors.hpp"

namespace flare {

struct ResourceSample {
    double t;        // seconds since process start
    double gpu_mb;   // GPU memory in MB
    double cpu_pct;  // CPU utilization, 100 = all cores busy
};

struct ResourceTrace {
    std::vector<ResourceSample> samples;
    double cadence_s = 0.1;
    double elapsed_s = 0.0;

    void save_csv(const std::string& path) const;
    static ResourceTrace load_csv(const std::string& path);
};

enum class RunStatus { completed, stuck, failed };

const char* to_string(RunStatus s);
RunStatus run_status_from_string(const std::string& s);

// Stuck-run penalty constants: one hour at full CPU and a 10 GB card at
// the 2048 MB tolerance.
constexpr double kPenaltyTimeS = 3600.0;
constexpr double kPenaltyAucGpu = 29491200.0;  // 3600 * (1024*10 - 2048)
constexpr double kPenaltyAucCpu = 360000.0;    // 3600 * 100
constexpr double kGpuToleranceMb = 2048.0;

struct RunResult {
    double time_s = 0.0;
    double auc_gpu = 0.0;
    double auc_cpu = 0.0;
    RunStatus status = RunStatus::completed;
    ResourceTrace trace;
};

// Pluggable resource backend so CI can run without GPU hardware.
class ResourceProvider {
public:
    virtual ~ResourceProvider() = default;
    // Called from the sampling thread; t is seconds since process start,
    // pid the profiled process (0 when not applicable).
    virtual ResourceSample sample(double t, long pid) = 0;
};

// Replays a breakpoint script (t, gpu_mb, cpu_pct); each breakpoint's
// values hold until the next one. An empty script reports zeros.
class MockSampler : public ResourceProvider {
public:
    explicit MockSampler(std::vector<ResourceSample> breakpoints);
    static MockSampler parse(const std::string& spec);  // "t:gpu:cpu;t:gpu:cpu;..."
    ResourceSample sample(double t, long pid) override;

private:
    std::vector<ResourceSample> breakpoints_;
};

// /proc-based CPU sampler; GPU memory reports 0 (no NVML on this host).
class ProcSampler : public ResourceProvider {
public:
    ProcSampler();
    ResourceSample sample(double t, long pid) override;

private:
    long ncores_;
    double last_t_ = 0.0;
    double last_cpu_s_ = 0.0;
};

std::unique_ptr<ResourceProvider> make_sampler_from_env();

// Rectangle-rule integral of max(0, gpu_mb - 2048) over the trace; the
// last sample extends to elapsed_s.
double auc_gpu(const ResourceTrace& trace);

// Rectangle-rule integral of cpu_pct over the trace.
double auc_cpu(const ResourceTrace& trace);

// Runs `argv + {case_input, output_dir}` under a sampling loop at 0.1 s
// cadence. Profiled runs are serialized by a global lock. On timeout the
// process group is killed and the stuck-run penalty triple is reported; a
// nonzero exit or a missing `expected_output` file yields status failed.
RunResult run_and_profile(const std::vector<std::string>& argv, const std::string& case_input,
                          const std::string& output_dir, double timeout_s,
                          ResourceProvider& sampler, const std::string& expected_output = "");

}  // namespace flare

#include "flare/profiler.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

extern char** environ;

namespace flare {
namespace {

std::mutex g_run_lock;  // "evaluated one by one": at most one profiled process

double read_proc_cpu_seconds(long pid) {
    std::ifstream in("/proc/" + std::to_string(pid) + "/stat");
    if (!in) return -1.0;
    std::string line;
    std::getline(in, line);
    // comm may contain spaces; fields resume after the closing paren.
    auto paren = line.rfind(')');
    if (paren == std::string::npos) return -1.0;
    std::istringstream rest(line.substr(paren + 1));
    std::string tok;
    // fields 3..13 precede utime(14), stime(15)
    for (int i = 3; i <= 13; ++i) rest >> tok;
    unsigned long utime = 0, stime = 0;
    rest >> utime >> stime;
    long hz = sysconf(_SC_CLK_TCK);
    return double(utime + stime) / double(hz > 0 ? hz : 100);
}

}  // namespace

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::completed:
            return "completed";
        case RunStatus::stuck:
            return "stuck";
        case RunStatus::failed:
            return "failed";
    }
    return "unknown";
}

RunStatus run_status_from_string(const std::string& s) {
    if (s == "completed") return RunStatus::completed;
    if (s == "stuck") return RunStatus::stuck;
    if (s == "failed") return RunStatus::failed;
    throw DataError("unknown run status: " + s);
}

void ResourceTrace::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace: " + path);
    out << "t,gpu_mb,cpu_pct\n";
    out.precision(10);
    for (const auto& s : samples) {
        out << s.t << "," << s.gpu_mb << "," << s.cpu_pct << "\n";
    }
}

ResourceTrace ResourceTrace::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read trace: " + path);
    ResourceTrace t;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ResourceSample s{};
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &s.t, &s.gpu_mb, &s.cpu_pct) != 3) {
            throw DataError("bad trace line: " + line);
        }
        t.samples.push_back(s);
    }
    if (!t.samples.empty()) t.elapsed_s = t.samples.back().t;
    return t;
}

MockSampler::MockSampler(std::vector<ResourceSample> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
    double prev = -1.0;
    for (const auto& b : breakpoints_) {
        if (b.t < 0 || b.t <= prev || b.gpu_mb < 0 || b.cpu_pct < 0) {
            throw ConfigError("mock sampler: breakpoints must have increasing t >= 0 and non-negative values");
        }
        prev = b.t;
    }
}

MockSampler MockSampler::parse(const std::string& spec) {
    std::vector<ResourceSample> bps;
    std::istringstream in(spec);
    std::string item;
    while (std::getline(in, item, ';')) {
        if (item.empty()) continue;
        ResourceSample s{};
        if (std::sscanf(item.c_str(), "%lf:%lf:%lf", &s.t, &s.gpu_mb, &s.cpu_pct) != 3) {
            throw ConfigError("mock sampler: bad breakpoint '" + item + "' (want t:gpu_mb:cpu_pct)");
        }
        bps.push_back(s);
    }
    return MockSampler(std::move(bps));
}

ResourceSample MockSampler::sample(double t, long) {
    ResourceSample out{t, 0.0, 0.0};
    for (const auto& b : breakpoints_) {
        if (b.t > t) break;
        out.gpu_mb = b.gpu_mb;
        out.cpu_pct = b.cpu_pct;
    }
    return out;
}

ProcSampler::ProcSampler() : ncores_(sysconf(_SC_NPROCESSORS_ONLN)) {
    if (ncores_ <= 0) ncores_ = 1;
}

ResourceSample ProcSampler::sample(double t, long pid) {
    ResourceSample out{t, 0.0, 0.0};
    double cpu_s = pid > 0 ? read_proc_cpu_seconds(pid) : -1.0;
    if (cpu_s >= 0 && t > last_t_) {
        double pct = 100.0 * (cpu_s - last_cpu_s_) / (t - last_t_) / double(ncores_);
        out.cpu_pct = pct > 0 ? pct : 0.0;
        last_t_ = t;
        last_cpu_s_ = cpu_s;
    }
    return out;
}

std::unique_ptr<ResourceProvider> make_sampler_from_env() {
    const char* kind = std::getenv("FLARE_SAMPLER");
    if (kind && std::string(kind) == "mock") {
        const char* spec = std::getenv("FLARE_MOCK_TRACE");
        return std::make_unique<MockSampler>(MockSampler::parse(spec ? spec : ""));
    }
    return std::make_unique<ProcSampler>();
}

double auc_gpu(const ResourceTrace& trace) {
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        double t0 = trace.samples[i].t;
        double t1 = i + 1 < trace.samples.size() ? trace.samples[i + 1].t : trace.elapsed_s;
        double dt = t1 - t0;
        if (dt <= 0) continue;
        double v = trace.samples[i].gpu_mb - kGpuToleranceMb;
        if (v > 0) acc += v * dt;
    }
    return acc;
}

double auc_cpu(const ResourceTrace& trace) {
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        double t0 = trace.samples[i].t;
        double t1 = i + 1 < trace.samples.size() ? trace.samples[i + 1].t : trace.elapsed_s;
        double dt = t1 - t0;
        if (dt <= 0) continue;
        acc += trace.samples[i].cpu_pct * dt;
    }
    return acc;
}

RunResult run_and_profile(const std::vector<std::string>& argv, const std::string& case_input,
                          const std::string& output_dir, double timeout_s,
                          ResourceProvider& sampler, const std::string& expected_output) {
    if (argv.empty()) throw LaunchError("empty command");
    if (timeout_s <= 0) throw ConfigError("timeout must be positive");
    std::lock_guard<std::mutex> lock(g_run_lock);

    std::filesystem::create_directories(output_dir);

    std::vector<std::string> full = argv;
    full.push_back(case_input);
    full.push_back(output_dir);
    std::vector<char*> cargv;
    for (auto& a : full) cargv.push_back(a.data());
    cargv.push_back(nullptr);

    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    // Child gets its own process group so a timeout kill reaches helpers too.
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    pid_t pid = 0;
    int rc = posix_spawnp(&pid, cargv[0], nullptr, &attr, cargv.data(), environ);
    posix_spawnattr_destroy(&attr);
    if (rc != 0) {
        throw LaunchError("cannot launch '" + argv[0] + "': " + std::strerror(rc));
    }

    RunResult result;
    result.trace.cadence_s = 0.1;
    auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    bool timed_out = false;
    int wstatus = 0;
    while (true) {
        pid_t done = waitpid(pid, &wstatus, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw LaunchError("waitpid failed");
        double t = elapsed();
        if (t >= timeout_s) {
            timed_out = true;
            kill(-pid, SIGKILL);
            waitpid(pid, &wstatus, 0);
            break;
        }
        result.trace.samples.push_back(sampler.sample(t, pid));
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    result.trace.elapsed_s = elapsed();

    if (timed_out) {
        result.status = RunStatus::stuck;
        result.time_s = kPenaltyTimeS;
        result.auc_gpu = kPenaltyAucGpu;
        result.auc_cpu = kPenaltyAucCpu;
        return result;
    }

    bool ok = WIFEXITED(wstatus) && WEXITSTATUS(wstatus) == 0;
    if (ok && !expected_output.empty() && !std::filesystem::exists(expected_output)) {
        ok = false;
    }
    result.status = ok ? RunStatus::completed : RunStatus::failed;
    result.time_s = result.trace.elapsed_s;
    result.auc_gpu = auc_gpu(result.trace);
    result.auc_cpu = auc_cpu(result.trace);
    return result;
}

}  // namespace flare

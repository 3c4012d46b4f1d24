#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "flare/profiler.hpp"

using namespace flare;
namespace fs = std::filesystem;

namespace {

ResourceTrace constant_trace(double gpu_mb, double cpu_pct, double duration, double dt = 0.1) {
    ResourceTrace t;
    for (double x = 0; x < duration - 1e-9; x += dt) t.samples.push_back({x, gpu_mb, cpu_pct});
    t.elapsed_s = duration;
    return t;
}

}  // namespace

TEST_CASE("penalty constants") {
    CHECK(kPenaltyTimeS == 3600.0);
    CHECK(kPenaltyAucGpu == 3600.0 * (1024 * 10 - 2048));
    CHECK(kPenaltyAucCpu == 3600.0 * 100);
}

TEST_CASE("auc_gpu tolerance transform") {
    CHECK(auc_gpu(constant_trace(2048.0, 0, 7.3)) == 0.0);
    CHECK(auc_gpu(constant_trace(1024.0, 0, 5.0)) == 0.0);
    CHECK(auc_gpu(constant_trace(3072.0, 0, 10.0)) == doctest::Approx(10240.0).epsilon(1e-12));
    CHECK(auc_gpu(ResourceTrace{}) == 0.0);
}

TEST_CASE("auc_cpu rectangle rule") {
    CHECK(auc_cpu(constant_trace(0, 0.0, 4.0)) == 0.0);
    CHECK(auc_cpu(constant_trace(0, 50.0, 20.0)) == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(auc_cpu(ResourceTrace{}) == 0.0);
}

TEST_CASE("auc handles jittered sample intervals") {
    ResourceTrace t;
    t.samples = {{0.0, 3048.0, 10.0}, {0.35, 2048.0, 20.0}, {0.4, 4048.0, 0.0}};
    t.elapsed_s = 1.0;
    // gpu: (3048-2048)*0.35 + 0 + (4048-2048)*0.6
    CHECK(auc_gpu(t) == doctest::Approx(0.35 * 1000 + 0.6 * 2000).epsilon(1e-12));
    CHECK(auc_cpu(t) == doctest::Approx(10 * 0.35 + 20 * 0.05).epsilon(1e-12));
}

TEST_CASE("auc additivity over trace concatenation") {
    ResourceTrace a = constant_trace(3000, 40, 2.0);
    ResourceTrace b = constant_trace(5000, 70, 3.0);
    ResourceTrace joined = a;
    for (auto s : b.samples) joined.samples.push_back({s.t + a.elapsed_s, s.gpu_mb, s.cpu_pct});
    joined.elapsed_s = a.elapsed_s + b.elapsed_s;
    CHECK(auc_gpu(joined) == doctest::Approx(auc_gpu(a) + auc_gpu(b)).epsilon(1e-12));
    CHECK(auc_cpu(joined) == doctest::Approx(auc_cpu(a) + auc_cpu(b)).epsilon(1e-12));
}

TEST_CASE("scaling time scales both integrals") {
    ResourceTrace t = constant_trace(4000, 30, 1.5);
    ResourceTrace scaled = t;
    for (auto& s : scaled.samples) s.t *= 3.0;
    scaled.elapsed_s *= 3.0;
    CHECK(auc_gpu(scaled) == doctest::Approx(3.0 * auc_gpu(t)).epsilon(1e-12));
    CHECK(auc_cpu(scaled) == doctest::Approx(3.0 * auc_cpu(t)).epsilon(1e-12));
}

TEST_CASE("mock sampler replay") {
    MockSampler empty({});
    CHECK(empty.sample(0.5, 0).gpu_mb == 0.0);
    CHECK(empty.sample(0.5, 0).cpu_pct == 0.0);

    MockSampler ramp({{0.0, 1000, 10}, {1.0, 3000, 50}});
    CHECK(ramp.sample(0.0, 0).gpu_mb == 1000.0);
    CHECK(ramp.sample(0.5, 0).gpu_mb == 1000.0);
    CHECK(ramp.sample(1.0, 0).gpu_mb == 3000.0);
    CHECK(ramp.sample(2.0, 0).cpu_pct == 50.0);

    // replaying into a trace reproduces the closed-form rectangle sum
    ResourceTrace t;
    for (int i = 0; i < 20; ++i) {
        double x = i * 0.1;
        t.samples.push_back(ramp.sample(x, 0));
        t.samples.back().t = x;
    }
    t.elapsed_s = 2.0;
    CHECK(auc_cpu(t) == doctest::Approx(10 * 1.0 + 50 * 1.0).epsilon(1e-9));
    CHECK(auc_gpu(t) == doctest::Approx(0.0 + (3000 - 2048) * 1.0).epsilon(1e-9));

    CHECK_THROWS_AS(MockSampler({{1.0, 0, 0}, {0.5, 0, 0}}), ConfigError);
    CHECK_THROWS_AS(MockSampler::parse("1.0:abc"), ConfigError);
    MockSampler parsed = MockSampler::parse("0:2048:10;1:4096:20");
    CHECK(parsed.sample(1.5, 0).gpu_mb == 4096.0);
}

TEST_CASE("trace csv round trip") {
    auto dir = fs::temp_directory_path() / "flare_profiler_tests";
    fs::create_directories(dir);
    ResourceTrace t = constant_trace(3000.5, 42.25, 1.0);
    auto path = (dir / "trace.csv").string();
    t.save_csv(path);
    ResourceTrace back = ResourceTrace::load_csv(path);
    REQUIRE(back.samples.size() == t.samples.size());
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
        CHECK(back.samples[i].t == doctest::Approx(t.samples[i].t).epsilon(1e-9));
        CHECK(back.samples[i].gpu_mb == t.samples[i].gpu_mb);
        CHECK(back.samples[i].cpu_pct == t.samples[i].cpu_pct);
    }
}

TEST_CASE("run_and_profile: completed run") {
    auto dir = fs::temp_directory_path() / "flare_profiler_tests" / "run_ok";
    MockSampler zeros({});
    RunResult r = run_and_profile({"/bin/sh", "-c", "sleep 0.4"}, "unused", dir.string(), 10.0,
                                  zeros);
    CHECK(r.status == RunStatus::completed);
    CHECK(r.time_s >= 0.4);
    CHECK(r.time_s < 2.0);
    CHECK(r.auc_gpu == 0.0);
    CHECK(r.auc_cpu == 0.0);
    CHECK(!r.trace.samples.empty());
}

TEST_CASE("run_and_profile: timeout yields the stuck penalty triple") {
    auto dir = fs::temp_directory_path() / "flare_profiler_tests" / "run_stuck";
    MockSampler zeros({});
    RunResult r = run_and_profile({"/bin/sh", "-c", "sleep 30"}, "unused", dir.string(), 0.5,
                                  zeros);
    CHECK(r.status == RunStatus::stuck);
    CHECK(r.time_s == 3600.0);
    CHECK(r.auc_gpu == 29491200.0);
    CHECK(r.auc_cpu == 360000.0);
}

TEST_CASE("run_and_profile: nonzero exit and missing output are failures") {
    auto dir = fs::temp_directory_path() / "flare_profiler_tests" / "run_fail";
    MockSampler zeros({});
    RunResult bad = run_and_profile({"/bin/sh", "-c", "exit 3"}, "unused", dir.string(), 5.0,
                                    zeros);
    CHECK(bad.status == RunStatus::failed);

    RunResult noout = run_and_profile({"/bin/true"}, "unused", dir.string(), 5.0, zeros,
                                      (dir / "never_written.nii.gz").string());
    CHECK(noout.status == RunStatus::failed);
}

TEST_CASE("run_and_profile: spawn failure is a launch error") {
    auto dir = fs::temp_directory_path() / "flare_profiler_tests" / "run_launch";
    MockSampler zeros({});
    CHECK_THROWS_AS(
        run_and_profile({"/no/such/executable_xyz"}, "unused", dir.string(), 5.0, zeros),
        LaunchError);
}

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flare/ranking.hpp"

namespace flare {

// Kendall rank correlation; tau-b (tie-adjusted) when ties are present,
// which reduces to tau-a on tie-free inputs.
double kendall_tau(const std::vector<double>& order_a, const std::vector<double>& order_b);

struct WilcoxonResult {
    double statistic;  // W+ (sum of positive-difference ranks)
    double p_value;    // two-sided
    bool exact;        // exact null distribution vs normal approximation
};

// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
// are dropped; needs >= 5 nonzero pairs. Exact null distribution up to
// n = 25, normal approximation with tie correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& paired_a,
                                    const std::vector<double>& paired_b);

namespace detail {
// Branch override so tests can compare the exact and approximate paths on
// the same data.
WilcoxonResult wilcoxon_signed_rank_mode(const std::vector<double>& paired_a,
                                         const std::vector<double>& paired_b, bool exact);
}  // namespace detail

struct BootstrapReport {
    int n_boot = 0;
    std::uint64_t rng_seed = 0;
    // Kendall's tau between each bootstrap leaderboard and the full-data
    // one, for the overall ranking and for each single-metric ranking.
    std::vector<double> tau_overall;
    std::vector<std::vector<double>> tau_per_metric;  // [metric][iteration]
    // bootstrap final-rank samples per algorithm, full-data order
    std::vector<std::string> algorithms;
    std::vector<std::vector<double>> rank_samples;  // [algorithm][iteration]

    void save_json(const std::string& path) const;
    // Histogram of integerized bootstrap ranks per algorithm.
    void save_rank_histogram_csv(const std::string& path) const;
};

// Case-resampling bootstrap of the full ranking pipeline. Deterministic
// given seed; each iteration draws from an mt19937_64 seeded with
// (seed, iteration), so serial and parallel execution agree.
BootstrapReport bootstrap_rankings(const MetricMatrix& m, int n_boot, std::uint64_t seed);

// Test hook: identical signature, but resample indices come from
// `draw(iteration)`; bootstrap_rankings passes the seeded RNG draw.
BootstrapReport bootstrap_rankings_with(
    const MetricMatrix& m, int n_boot, std::uint64_t seed,
    const std::function<std::vector<std::size_t>(int)>& draw);

}  // namespace flare

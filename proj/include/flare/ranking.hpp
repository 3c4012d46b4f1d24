#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "flare/errors.hpp"

namespace flare {

enum class Metric { dsc = 0, nsd = 1, time = 2, auc_gpu = 3, auc_cpu = 4 };
constexpr int kNumMetrics = 5;
constexpr std::array<const char*, kNumMetrics> kMetricNames{"dsc", "nsd", "time_s", "auc_gpu",
                                                            "auc_cpu"};
// Higher is better for DSC/NSD, lower for the efficiency metrics.
constexpr std::array<bool, kNumMetrics> kHigherBetter{true, true, false, false, false};
// AUC_GPU and AUC_CPU carry half weight.
constexpr std::array<double, kNumMetrics> kMetricWeights{1.0, 1.0, 1.0, 0.5, 0.5};

using MetricTuple = std::array<double, kNumMetrics>;

// Worst-case values applied to missing / stuck / failed cells.
constexpr MetricTuple kPenaltyTuple{0.0, 0.0, 3600.0, 29491200.0, 360000.0};

// Dense algorithms x cases x 5-metric tensor. dsc/nsd entries are the
// per-case means over the 13 organs.
struct MetricMatrix {
    std::vector<std::string> algorithms;
    std::vector<std::string> cases;
    // values[a][c] = 5-tuple; nullopt marks a missing cell before fill_penalties.
    std::vector<std::vector<std::optional<MetricTuple>>> values;

    std::size_t n_algorithms() const { return algorithms.size(); }
    std::size_t n_cases() const { return cases.size(); }

    void save_csv(const std::string& path) const;
    static MetricMatrix load_csv(const std::string& path);
};

struct RankTable {
    // ranks[a][c][m]; fractional ranks for ties, 1 = best.
    std::vector<std::vector<std::array<double, kNumMetrics>>> ranks;
    std::size_t n_algorithms = 0;
    std::size_t n_cases = 0;
};

struct LeaderboardEntry {
    std::string algorithm;
    double aggregate_score;  // weighted mean rank, lower is better
    double final_rank;       // fractional on score ties
};

struct Leaderboard {
    std::vector<LeaderboardEntry> entries;  // sorted by ascending score

    void save_csv(const std::string& path) const;
    void save_json(const std::string& path) const;
    static Leaderboard load_json(const std::string& path);
};

MetricMatrix fill_penalties(const MetricMatrix& partial);

// Ranks algorithms per (case, metric); exact ties share the average of the
// positions they span. NaN cells are a data error naming the cell.
RankTable per_case_metric_ranks(const MetricMatrix& m);

// Weighted mean rank with weights (1,1,1,0.5,0.5), normalized by the
// weight sum so scores lie in [1, A].
Leaderboard aggregate_rank(const RankTable& rt, const std::vector<std::string>& algorithms);

Leaderboard rank_leaderboard(const MetricMatrix& m);

// Fractional ranking of arbitrary scores (ascending = rank 1).
std::vector<double> fractional_ranks(const std::vector<double>& scores, bool higher_better);

}  // namespace flare

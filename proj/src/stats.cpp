#include "flare/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <json.hpp>

namespace flare {
namespace {

// Lemire bounded draw; avoids std::uniform_int_distribution, whose output
// is not specified identically across standard libraries.
std::size_t bounded(std::mt19937_64& eng, std::size_t n) {
    using u128 = unsigned __int128;
    return std::size_t((u128(eng()) * u128(n)) >> 64);
}

std::mt19937_64 iteration_engine(std::uint64_t seed, int iteration) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32),
                      std::uint32_t(iteration)};
    return std::mt19937_64(seq);
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeError("kendall_tau: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw DataError("kendall_tau: need at least 2 elements");
    long long concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double da = a[i] - a[j], db = b[i] - b[j];
            if (da == 0 && db == 0) {
                ++ties_a;
                ++ties_b;
            } else if (da == 0) {
                ++ties_a;
            } else if (db == 0) {
                ++ties_b;
            } else if ((da > 0) == (db > 0)) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    double n0 = double(n) * double(n - 1) / 2.0;
    double denom = std::sqrt((n0 - double(ties_a)) * (n0 - double(ties_b)));
    if (denom == 0) throw DataError("kendall_tau: all pairs tied");
    return double(concordant - discordant) / denom;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t n_nonzero = 0;
    if (a.size() != b.size()) throw ShapeError("wilcoxon: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) n_nonzero += a[i] != b[i];
    return detail::wilcoxon_signed_rank_mode(a, b, n_nonzero <= 25);
}

WilcoxonResult detail::wilcoxon_signed_rank_mode(const std::vector<double>& a,
                                                 const std::vector<double>& b, bool exact) {
    if (a.size() != b.size()) throw ShapeError("wilcoxon: length mismatch");
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0) diffs.push_back(d);
    }
    const std::size_t n = diffs.size();
    if (n == 0) throw DataError("wilcoxon: all differences are zero");
    if (n < 5) throw DataError("wilcoxon: need at least 5 nonzero differences");

    std::vector<double> absd(n);
    for (std::size_t i = 0; i < n; ++i) absd[i] = std::abs(diffs[i]);
    std::vector<double> ranks = fractional_ranks(absd, /*higher_better=*/false);

    double w_plus = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
    }

    WilcoxonResult res{};
    res.statistic = w_plus;

    if (exact) {
        if (n > 25) throw DataError("wilcoxon: exact branch limited to n <= 25");
        res.exact = true;
        // Null distribution of 2*W+ by dynamic programming; doubled ranks
        // are integers even with ties.
        std::vector<long long> r2(n);
        long long total2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = llround(2.0 * ranks[i]);
            total2 += r2[i];
        }
        std::vector<double> count(std::size_t(total2) + 1, 0.0);
        count[0] = 1.0;
        long long reach = 0;
        for (std::size_t i = 0; i < n; ++i) {
            reach += r2[i];
            for (long long s = reach; s >= r2[i]; --s) count[s] += count[s - r2[i]];
        }
        double all = std::ldexp(1.0, int(n));
        long long w2 = llround(2.0 * w_plus);
        double le = 0, ge = 0;
        for (long long s = 0; s <= total2; ++s) {
            if (s <= w2) le += count[s];
            if (s >= w2) ge += count[s];
        }
        res.p_value = std::min(1.0, 2.0 * std::min(le, ge) / all);
    } else {
        res.exact = false;
        double mean = double(n) * double(n + 1) / 4.0;
        double var = double(n) * double(n + 1) * double(2 * n + 1) / 24.0;
        // tie correction: subtract sum(t^3 - t)/48 over tie groups
        std::vector<double> sorted(absd);
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && sorted[j + 1] == sorted[i]) ++j;
            double t = double(j - i + 1);
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
        double z = (std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
        if (z < 0) z = 0;
        res.p_value = std::min(1.0, 2.0 * normal_sf(z));
    }
    if (res.p_value <= 0) res.p_value = std::numeric_limits<double>::min();
    return res;
}

namespace {

// Per-algorithm final ranks (full-data order) for the overall leaderboard
// and for each single-metric leaderboard, given a case subset.
struct RankSnapshot {
    std::vector<double> overall;                              // [algorithm]
    std::array<std::vector<double>, kNumMetrics> per_metric;  // [metric][algorithm]
};

RankSnapshot snapshot_ranks(const MetricMatrix& m, const std::vector<std::size_t>& case_idx) {
    const std::size_t A = m.n_algorithms(), C = case_idx.size();
    RankTable rt;
    rt.n_algorithms = A;
    rt.n_cases = C;
    rt.ranks.assign(A, std::vector<std::array<double, kNumMetrics>>(C));
    std::vector<double> col(A);
    for (std::size_t ci = 0; ci < C; ++ci) {
        std::size_t c = case_idx[ci];
        for (int mi = 0; mi < kNumMetrics; ++mi) {
            for (std::size_t a = 0; a < A; ++a) col[a] = (*m.values[a][c])[mi];
            auto ranks = fractional_ranks(col, kHigherBetter[mi]);
            for (std::size_t a = 0; a < A; ++a) rt.ranks[a][ci][mi] = ranks[a];
        }
    }

    RankSnapshot snap;
    const double wsum = std::accumulate(kMetricWeights.begin(), kMetricWeights.end(), 0.0);
    std::vector<double> overall_scores(A);
    for (int mi = 0; mi < kNumMetrics; ++mi) {
        std::vector<double> metric_scores(A, 0.0);
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t ci = 0; ci < C; ++ci) metric_scores[a] += rt.ranks[a][ci][mi];
            metric_scores[a] /= double(C);
        }
        snap.per_metric[mi] = fractional_ranks(metric_scores, /*higher_better=*/false);
    }
    for (std::size_t a = 0; a < A; ++a) {
        double acc = 0;
        for (std::size_t ci = 0; ci < C; ++ci) {
            for (int mi = 0; mi < kNumMetrics; ++mi) {
                acc += kMetricWeights[mi] * rt.ranks[a][ci][mi];
            }
        }
        overall_scores[a] = acc / (double(C) * wsum);
    }
    snap.overall = fractional_ranks(overall_scores, /*higher_better=*/false);
    return snap;
}

// tau for stability traces: a fully-tied ranking has no pair order to
// correlate, so agreement is perfect iff the rank vectors coincide.
double stability_tau(const std::vector<double>& a, const std::vector<double>& b) {
    auto fully_tied = [](const std::vector<double>& v) {
        return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
    };
    if (fully_tied(a) || fully_tied(b)) return a == b ? 1.0 : 0.0;
    return kendall_tau(a, b);
}

}  // namespace

BootstrapReport bootstrap_rankings_with(
    const MetricMatrix& m, int n_boot, std::uint64_t seed,
    const std::function<std::vector<std::size_t>(int)>& draw) {
    const std::size_t A = m.n_algorithms(), C = m.n_cases();
    if (A < 2) throw DataError("bootstrap: need at least 2 algorithms");
    if (n_boot < 1) throw ConfigError("bootstrap: n_boot must be >= 1");
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t c = 0; c < C; ++c) {
            if (!m.values[a][c].has_value()) {
                throw DataError("bootstrap: matrix has missing cells; run fill_penalties first");
            }
        }
    }

    std::vector<std::size_t> full_idx(C);
    std::iota(full_idx.begin(), full_idx.end(), 0);
    RankSnapshot full = snapshot_ranks(m, full_idx);

    BootstrapReport rep;
    rep.n_boot = n_boot;
    rep.rng_seed = seed;
    rep.algorithms = m.algorithms;
    rep.tau_per_metric.assign(kNumMetrics, {});
    rep.rank_samples.assign(A, {});

    for (int it = 0; it < n_boot; ++it) {
        std::vector<std::size_t> idx = draw(it);
        RankSnapshot snap = snapshot_ranks(m, idx);
        rep.tau_overall.push_back(stability_tau(snap.overall, full.overall));
        for (int mi = 0; mi < kNumMetrics; ++mi) {
            rep.tau_per_metric[mi].push_back(
                stability_tau(snap.per_metric[mi], full.per_metric[mi]));
        }
        for (std::size_t a = 0; a < A; ++a) rep.rank_samples[a].push_back(snap.overall[a]);
    }
    return rep;
}

BootstrapReport bootstrap_rankings(const MetricMatrix& m, int n_boot, std::uint64_t seed) {
    const std::size_t C = m.n_cases();
    return bootstrap_rankings_with(m, n_boot, seed, [&, seed](int it) {
        auto eng = iteration_engine(seed, it);
        std::vector<std::size_t> idx(C);
        for (auto& v : idx) v = bounded(eng, C);
        return idx;
    });
}

void BootstrapReport::save_json(const std::string& path) const {
    nlohmann::json j;
    j["n_boot"] = n_boot;
    j["rng_seed"] = rng_seed;
    j["rng"] = "mt19937_64 seeded per iteration from (seed, iteration)";
    j["tau_overall"] = tau_overall;
    for (int mi = 0; mi < kNumMetrics; ++mi) {
        j["tau_per_metric"][kMetricNames[mi]] = tau_per_metric[mi];
    }
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        j["rank_samples"][algorithms[a]] = rank_samples[a];
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << j.dump(2) << "\n";
}

void BootstrapReport::save_rank_histogram_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "algorithm,rank,count\n";
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        std::map<double, int> hist;
        for (double r : rank_samples[a]) ++hist[r];
        for (auto& [rank, count] : hist) {
            out << algorithms[a] << "," << rank << "," << count << "\n";
        }
    }
}

}  // namespace flare

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "flare/stats.hpp"

using namespace flare;

namespace {

// naive tau-a for tie-free inputs
double brute_tau(const std::vector<double>& a, const std::vector<double>& b) {
    long long c = 0, d = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            double s = (a[i] - a[j]) * (b[i] - b[j]);
            if (s > 0) ++c;
            else if (s < 0) ++d;
        }
    double n0 = double(a.size()) * double(a.size() - 1) / 2.0;
    return double(c - d) / n0;
}

// exact two-sided wilcoxon p by enumerating all 2^n sign assignments
double brute_wilcoxon_p(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> absd;
    std::vector<int> sign;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        if (d != 0) {
            absd.push_back(std::abs(d));
            sign.push_back(d > 0 ? 1 : -1);
        }
    }
    std::size_t n = absd.size();
    std::vector<double> ranks = fractional_ranks(absd, false);
    double w_obs = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (sign[i] > 0) w_obs += ranks[i];
    long long le = 0, ge = 0, total = 1LL << n;
    for (long long mask = 0; mask < total; ++mask) {
        double w = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1LL << i)) w += ranks[i];
        if (w <= w_obs + 1e-12) ++le;
        if (w >= w_obs - 1e-12) ++ge;
    }
    double p = 2.0 * double(std::min(le, ge)) / double(total);
    return std::min(1.0, p);
}

MetricMatrix dominance_matrix(std::size_t A, std::size_t C, double gap) {
    MetricMatrix m;
    for (std::size_t a = 0; a < A; ++a) m.algorithms.push_back("algo" + std::to_string(a));
    for (std::size_t c = 0; c < C; ++c) m.cases.push_back("case" + std::to_string(c));
    m.values.assign(A, std::vector<std::optional<MetricTuple>>(C));
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> noise(0, gap * 0.4);
    for (std::size_t a = 0; a < A; ++a) {
        for (std::size_t c = 0; c < C; ++c) {
            double level = 1.0 - gap * double(a);
            double e = noise(rng);
            m.values[a][c] = MetricTuple{level - e, level - e, 10 * (double(a) + 1) + e,
                                         100 * (double(a) + 1) + e, 50 * (double(a) + 1) + e};
        }
    }
    return m;
}

}  // namespace

TEST_CASE("kendall tau endpoints and swap") {
    std::vector<double> x{1, 2, 3, 4};
    std::vector<double> rev{4, 3, 2, 1};
    CHECK(kendall_tau(x, x) == 1.0);
    CHECK(kendall_tau(x, rev) == -1.0);
    std::vector<double> swapped{1, 3, 2, 4};  // one adjacent swap of 4 -> 2/3
    CHECK(kendall_tau(x, swapped) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(kendall_tau(x, swapped) == kendall_tau(swapped, x));
    CHECK_THROWS_AS(kendall_tau(x, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("kendall tau matches pair-counting oracle on random permutations") {
    std::mt19937 rng(1);
    for (int t = 0; t < 100; ++t) {
        std::size_t n = 2 + rng() % 49;
        std::vector<double> a(n), b(n);
        std::iota(a.begin(), a.end(), 0.0);
        std::iota(b.begin(), b.end(), 0.0);
        std::shuffle(a.begin(), a.end(), rng);
        std::shuffle(b.begin(), b.end(), rng);
        CHECK(kendall_tau(a, b) == doctest::Approx(brute_tau(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("kendall tau-b handles ties") {
    // endpoints survive fractional (tied) ranks
    std::vector<double> a{1, 2.5, 2.5, 4};
    CHECK(kendall_tau(a, a) == 1.0);
    std::vector<double> arev{4, 2.5, 2.5, 1};
    CHECK(kendall_tau(a, arev) == -1.0);
    CHECK_THROWS_AS(kendall_tau(std::vector<double>(3, 1.0), std::vector<double>(3, 2.0)),
                    DataError);
}

TEST_CASE("wilcoxon: constant positive shift, n = 10") {
    std::vector<double> b{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> a;
    for (double x : b) a.push_back(x + 2.0);
    WilcoxonResult r = wilcoxon_signed_rank(a, b);
    CHECK(r.exact);
    CHECK(r.statistic == 55.0);
    CHECK(r.p_value == doctest::Approx(2.0 / 1024.0).epsilon(1e-15));
}

TEST_CASE("wilcoxon degenerate and short inputs") {
    std::vector<double> a{1, 2, 3, 4, 5, 6};
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, a), DataError);
    std::vector<double> b{1, 2, 3, 5, 5, 6};  // only one nonzero difference
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), DataError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, std::vector<double>{1}), ShapeError);
}

TEST_CASE("wilcoxon exact p matches 2^n enumeration at n = 12") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 20; ++t) {
        std::vector<double> a(12), b(12);
        for (int i = 0; i < 12; ++i) {
            a[i] = u(rng);
            b[i] = a[i] + u(rng);
        }
        WilcoxonResult r = wilcoxon_signed_rank(a, b);
        CHECK(r.exact);
        CHECK(r.p_value == doctest::Approx(brute_wilcoxon_p(a, b)).epsilon(1e-12));
        CHECK(r.p_value > 0.0);
        CHECK(r.p_value <= 1.0);
    }
}

TEST_CASE("wilcoxon exact and approximate branches agree at n = 25") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> a(25), b(25);
        for (int i = 0; i < 25; ++i) {
            a[i] = u(rng);
            b[i] = a[i] + u(rng) + 0.05;
        }
        WilcoxonResult exact = detail::wilcoxon_signed_rank_mode(a, b, true);
        WilcoxonResult approx = detail::wilcoxon_signed_rank_mode(a, b, false);
        CHECK(exact.exact);
        CHECK(!approx.exact);
        CHECK(std::abs(exact.p_value - approx.p_value) < 0.01);
    }
}

TEST_CASE("bootstrap: dominant algorithm ranks first in every sample") {
    MetricMatrix m = dominance_matrix(4, 12, 0.2);
    BootstrapReport rep = bootstrap_rankings(m, 200, 42);
    REQUIRE(rep.rank_samples[0].size() == 200);
    for (double r : rep.rank_samples[0]) CHECK(r == 1.0);
    for (double tau : rep.tau_overall) {
        CHECK(tau >= -1.0);
        CHECK(tau <= 1.0);
    }
}

TEST_CASE("bootstrap determinism under a fixed seed") {
    MetricMatrix m = dominance_matrix(5, 10, 0.1);
    BootstrapReport r1 = bootstrap_rankings(m, 50, 7);
    BootstrapReport r2 = bootstrap_rankings(m, 50, 7);
    CHECK(r1.tau_overall == r2.tau_overall);
    CHECK(r1.rank_samples == r2.rank_samples);
    for (int mi = 0; mi < kNumMetrics; ++mi) CHECK(r1.tau_per_metric[mi] == r2.tau_per_metric[mi]);

    // with overlapping algorithms the resample draw matters, so seeds differ
    MetricMatrix noisy = m;
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& row : noisy.values)
        for (auto& cell : row) *cell = MetricTuple{u(rng), u(rng), u(rng), u(rng), u(rng)};
    BootstrapReport n1 = bootstrap_rankings(noisy, 50, 7);
    BootstrapReport n2 = bootstrap_rankings(noisy, 50, 8);
    CHECK(n1.rank_samples != n2.rank_samples);
}

TEST_CASE("degenerate resampler yields tau = 1 everywhere") {
    MetricMatrix m = dominance_matrix(4, 9, 0.15);
    std::vector<std::size_t> full(9);
    std::iota(full.begin(), full.end(), 0);
    BootstrapReport rep =
        bootstrap_rankings_with(m, 20, 0, [&](int) { return full; });
    for (double tau : rep.tau_overall) CHECK(tau == 1.0);
    for (int mi = 0; mi < kNumMetrics; ++mi)
        for (double tau : rep.tau_per_metric[mi]) CHECK(tau == 1.0);
}

TEST_CASE("bootstrap rejects degenerate inputs") {
    MetricMatrix one = dominance_matrix(1, 5, 0.1);
    CHECK_THROWS_AS(bootstrap_rankings(one, 10, 0), DataError);
    MetricMatrix m = dominance_matrix(3, 5, 0.1);
    CHECK_THROWS_AS(bootstrap_rankings(m, 0, 0), ConfigError);
    m.values[1][2].reset();
    CHECK_THROWS_AS(bootstrap_rankings(m, 10, 0), DataError);
}

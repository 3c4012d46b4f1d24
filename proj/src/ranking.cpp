#include "flare/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace flare {

std::vector<double> fractional_ranks(const std::vector<double>& scores, bool higher_better) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return higher_better ? scores[a] > scores[b] : scores[a] < scores[b];
    });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        // positions i..j (0-based) share the average rank
        double r = (double(i) + double(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

MetricMatrix fill_penalties(const MetricMatrix& partial) {
    MetricMatrix out = partial;
    for (auto& row : out.values) {
        for (auto& cell : row) {
            if (!cell.has_value()) cell = kPenaltyTuple;
        }
    }
    return out;
}

RankTable per_case_metric_ranks(const MetricMatrix& m) {
    const std::size_t A = m.n_algorithms(), C = m.n_cases();
    if (A == 0 || C == 0) throw DataError("empty metric matrix");
    RankTable rt;
    rt.n_algorithms = A;
    rt.n_cases = C;
    rt.ranks.assign(A, std::vector<std::array<double, kNumMetrics>>(C));
    std::vector<double> col(A);
    for (std::size_t c = 0; c < C; ++c) {
        for (int mi = 0; mi < kNumMetrics; ++mi) {
            for (std::size_t a = 0; a < A; ++a) {
                if (!m.values[a][c].has_value()) {
                    throw DataError("missing cell (" + m.algorithms[a] + ", " + m.cases[c] +
                                    "); run fill_penalties first");
                }
                double v = (*m.values[a][c])[mi];
                if (std::isnan(v)) {
                    throw DataError("NaN metric value at (" + m.algorithms[a] + ", " +
                                    m.cases[c] + ", " + kMetricNames[mi] + ")");
                }
                col[a] = v;
            }
            auto ranks = fractional_ranks(col, kHigherBetter[mi]);
            for (std::size_t a = 0; a < A; ++a) rt.ranks[a][c][mi] = ranks[a];
        }
    }
    return rt;
}

Leaderboard aggregate_rank(const RankTable& rt, const std::vector<std::string>& algorithms) {
    const std::size_t A = rt.n_algorithms, C = rt.n_cases;
    if (algorithms.size() != A) throw ShapeError("algorithm list does not match rank table");
    const double wsum = std::accumulate(kMetricWeights.begin(), kMetricWeights.end(), 0.0);
    std::vector<double> scores(A);
    for (std::size_t a = 0; a < A; ++a) {
        double acc = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
            for (int mi = 0; mi < kNumMetrics; ++mi) {
                acc += kMetricWeights[mi] * rt.ranks[a][c][mi];
            }
        }
        scores[a] = acc / (double(C) * wsum);
    }
    auto final_ranks = fractional_ranks(scores, /*higher_better=*/false);
    Leaderboard lb;
    lb.entries.resize(A);
    for (std::size_t a = 0; a < A; ++a) {
        lb.entries[a] = {algorithms[a], scores[a], final_ranks[a]};
    }
    std::stable_sort(lb.entries.begin(), lb.entries.end(),
                     [](const LeaderboardEntry& x, const LeaderboardEntry& y) {
                         return x.aggregate_score < y.aggregate_score;
                     });
    return lb;
}

Leaderboard rank_leaderboard(const MetricMatrix& m) {
    return aggregate_rank(per_case_metric_ranks(m), m.algorithms);
}

void MetricMatrix::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "algorithm,case";
    for (auto* name : kMetricNames) out << "," << name;
    out << "\n";
    out.precision(17);
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        for (std::size_t c = 0; c < cases.size(); ++c) {
            if (!values[a][c].has_value()) continue;
            out << algorithms[a] << "," << cases[c];
            for (double v : *values[a][c]) out << "," << v;
            out << "\n";
        }
    }
}

MetricMatrix MetricMatrix::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read: " + path);
    MetricMatrix m;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty metric CSV: " + path);
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, MetricTuple>> cells;
    auto index_of = [](std::vector<std::string>& names, const std::string& name) {
        auto it = std::find(names.begin(), names.end(), name);
        if (it != names.end()) return std::size_t(it - names.begin());
        names.push_back(name);
        return names.size() - 1;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string algo, cs, tok;
        if (!std::getline(row, algo, ',') || !std::getline(row, cs, ',')) {
            throw FormatError("bad metric CSV row: " + line);
        }
        MetricTuple t{};
        for (int mi = 0; mi < kNumMetrics; ++mi) {
            if (!std::getline(row, tok, ',')) throw FormatError("bad metric CSV row: " + line);
            t[mi] = std::stod(tok);
        }
        cells.push_back({{index_of(m.algorithms, algo), index_of(m.cases, cs)}, t});
    }
    m.values.assign(m.algorithms.size(),
                    std::vector<std::optional<MetricTuple>>(m.cases.size()));
    for (auto& [ij, t] : cells) m.values[ij.first][ij.second] = t;
    return m;
}

void Leaderboard::save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "rank,algorithm,aggregate_score\n";
    out.precision(17);
    for (const auto& e : entries) {
        out << e.final_rank << "," << e.algorithm << "," << e.aggregate_score << "\n";
    }
}

void Leaderboard::save_json(const std::string& path) const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& e : entries) {
        j.push_back({{"algorithm", e.algorithm},
                     {"aggregate_score", e.aggregate_score},
                     {"final_rank", e.final_rank}});
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << j.dump(2) << "\n";
}

Leaderboard Leaderboard::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    Leaderboard lb;
    for (const auto& e : j) {
        lb.entries.push_back({e.at("algorithm").get<std::string>(),
                              e.at("aggregate_score").get<double>(),
                              e.at("final_rank").get<double>()});
    }
    return lb;
}

}  // namespace flare

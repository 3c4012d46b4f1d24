#include "flare/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace flare {
namespace {

constexpr double kInf = 1e30;

void check_same_dims(const BinaryMask& a, const BinaryMask& b) {
    if (a.dims != b.dims) {
        throw ShapeError("mask dimension mismatch: " + std::to_string(a.dims[0]) + "x" +
                         std::to_string(a.dims[1]) + "x" + std::to_string(a.dims[2]) + " vs " +
                         std::to_string(b.dims[0]) + "x" + std::to_string(b.dims[1]) + "x" +
                         std::to_string(b.dims[2]));
    }
}

// 1D lower-envelope squared-distance transform (Felzenszwalb-Huttenlocher)
// at sample pitch w. f is read at stride `stride`, n elements.
void edt1d(double* f, int n, std::size_t stride, double w, std::vector<double>& scratch,
           std::vector<int>& v, std::vector<double>& z) {
    scratch.resize(n);
    v.resize(n);
    z.resize(n + 1);
    for (int i = 0; i < n; ++i) scratch[i] = f[i * stride];

    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double pq = q * w;
        double fq = scratch[q] + pq * pq;
        while (true) {
            double pv = v[k] * w;
            double s = (fq - (scratch[v[k]] + pv * pv)) / (2 * pq - 2 * pv);
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = kInf;
            break;
        }
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        double pq = q * w;
        while (z[k + 1] < pq) ++k;
        double d = (q - v[k]) * w;
        f[q * stride] = d * d + scratch[v[k]];
    }
}

// Exact squared anisotropic EDT over a dense field (0 at sites, inf else).
void edt3d(std::vector<double>& field, std::array<int, 3> dims, std::array<double, 3> spacing) {
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    std::vector<double> scratch;
    std::vector<int> v;
    std::vector<double> z;
    for (int k = 0; k < nz; ++k)
        for (int j = 0; j < ny; ++j)
            edt1d(field.data() + std::size_t(nx) * (j + std::size_t(ny) * k), nx, 1, spacing[0],
                  scratch, v, z);
    for (int k = 0; k < nz; ++k)
        for (int i = 0; i < nx; ++i)
            edt1d(field.data() + i + std::size_t(nx) * ny * k, ny, nx, spacing[1], scratch, v, z);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            edt1d(field.data() + i + std::size_t(nx) * j, nz, std::size_t(nx) * ny, spacing[2],
                  scratch, v, z);
}

std::vector<double> squared_distance_field(const BoundarySet& target, std::array<int, 3> dims,
                                           std::array<double, 3> spacing) {
    if (target.empty()) throw DataError("distance_to_set: empty target set");
    std::vector<double> field(std::size_t(dims[0]) * dims[1] * dims[2], kInf);
    for (const auto& p : target.voxels) {
        field[std::size_t(p[0]) + std::size_t(dims[0]) * (p[1] + std::size_t(dims[1]) * p[2])] = 0.0;
    }
    edt3d(field, dims, spacing);
    return field;
}

}  // namespace

ToleranceTable ToleranceTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open tolerance config: " + path);
    ToleranceTable t{};
    std::array<bool, kNumOrgans> seen{};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("tolerance config line " + std::to_string(lineno) +
                              ": expected 'organ name: millimetres'");
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, colon));
        std::string val = trim(line.substr(colon + 1));
        OrganId organ = OrganId::from_name(key);  // throws on unknown keys
        if (seen[organ.value - 1]) {
            throw ConfigError("tolerance config: duplicate entry for " + key);
        }
        std::size_t pos = 0;
        double tau;
        try {
            tau = std::stod(val, &pos);
        } catch (const std::exception&) {
            throw ConfigError("tolerance config line " + std::to_string(lineno) +
                              ": bad number '" + val + "'");
        }
        if (pos != val.size() || !std::isfinite(tau) || tau < 0) {
            throw ConfigError("tolerance config line " + std::to_string(lineno) +
                              ": tolerance must be a finite non-negative number");
        }
        seen[organ.value - 1] = true;
        t.tau_mm[organ.value - 1] = tau;
    }
    for (int i = 0; i < kNumOrgans; ++i) {
        if (!seen[i]) {
            throw ConfigError(std::string("tolerance config: missing entry for ") +
                              OrganId{i + 1}.name());
        }
    }
    return t;
}

ToleranceTable ToleranceTable::uniform(double tau) {
    ToleranceTable t{};
    t.tau_mm.fill(tau);
    return t;
}

double CaseAccuracy::mean_dsc() const {
    double s = 0;
    for (const auto& o : organs) s += o.dsc;
    return s / kNumOrgans;
}

double CaseAccuracy::mean_nsd() const {
    double s = 0;
    for (const auto& o : organs) s += o.nsd;
    return s / kNumOrgans;
}

double dsc(const BinaryMask& gt, const BinaryMask& pred) {
    check_same_dims(gt, pred);
    std::size_t ng = 0, ns = 0, inter = 0;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        bool g = gt.data[i] != 0;
        bool s = pred.data[i] != 0;
        ng += g;
        ns += s;
        inter += g && s;
    }
    if (ng == 0 && ns == 0) return 1.0;
    if (ng == 0 || ns == 0) return 0.0;
    return 2.0 * double(inter) / double(ng + ns);
}

BoundarySet extract_boundary(const BinaryMask& mask) {
    BoundarySet b;
    b.dims = mask.dims;
    const int nx = mask.dims[0], ny = mask.dims[1], nz = mask.dims[2];
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                if (!mask.at(i, j, k)) continue;
                bool boundary = i == 0 || i == nx - 1 || j == 0 || j == ny - 1 || k == 0 ||
                                k == nz - 1 || !mask.at(i - 1, j, k) || !mask.at(i + 1, j, k) ||
                                !mask.at(i, j - 1, k) || !mask.at(i, j + 1, k) ||
                                !mask.at(i, j, k - 1) || !mask.at(i, j, k + 1);
                if (boundary) b.voxels.push_back({i, j, k});
            }
        }
    }
    return b;
}

std::vector<double> distance_to_set(const BoundarySet& target, std::array<int, 3> dims,
                                    std::array<double, 3> spacing) {
    auto field = squared_distance_field(target, dims, spacing);
    for (auto& v : field) v = std::sqrt(v);
    return field;
}

double nsd(const BinaryMask& gt, const BinaryMask& pred, std::array<double, 3> spacing,
           double tau_mm) {
    check_same_dims(gt, pred);
    if (tau_mm < 0) throw DataError("nsd: tolerance must be non-negative");
    BoundarySet bg = extract_boundary(gt);
    BoundarySet bs = extract_boundary(pred);
    if (bg.empty() && bs.empty()) return 1.0;
    if (bg.empty() || bs.empty()) return 0.0;

    const double tau2 = tau_mm * tau_mm;
    auto count_within = [&](const BoundarySet& points, const BoundarySet& other) {
        auto field = squared_distance_field(other, points.dims, spacing);
        std::size_t n = 0;
        for (const auto& p : points.voxels) {
            double d2 = field[std::size_t(p[0]) +
                              std::size_t(points.dims[0]) *
                                  (p[1] + std::size_t(points.dims[1]) * p[2])];
            if (d2 <= tau2) ++n;
        }
        return n;
    };
    std::size_t num = count_within(bg, bs) + count_within(bs, bg);
    return double(num) / double(bg.size() + bs.size());
}

double organ_volume_cm3(const BinaryMask& mask, std::array<double, 3> spacing) {
    return double(mask.popcount()) * spacing[0] * spacing[1] * spacing[2] / 1000.0;
}

CaseAccuracy evaluate_case(const LabelVolume& gt, const LabelVolume& pred,
                           const ToleranceTable& tol) {
    if (gt.dims() != pred.dims()) {
        throw DataError("case pairing error: ground-truth and prediction dims differ");
    }
    for (int j = 0; j < 3; ++j) {
        double a = gt.spacing()[j], b = pred.spacing()[j];
        if (std::abs(a - b) > 1e-3 * std::max(std::abs(a), std::abs(b))) {
            throw DataError("case pairing error: spacing differs beyond 1e-3 relative");
        }
    }
    CaseAccuracy acc;
    for (OrganId organ : OrganId::all()) {
        BinaryMask g = organ_mask(gt, organ);
        BinaryMask s = organ_mask(pred, organ);
        OrganAccuracy& o = acc.organs[organ.value - 1];
        o.dsc = dsc(g, s);
        o.nsd = nsd(g, s, gt.spacing(), tol[organ]);
        o.gt_volume_cm3 = organ_volume_cm3(g, gt.spacing());
        o.pred_volume_cm3 = organ_volume_cm3(s, gt.spacing());
    }
    return acc;
}

double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw ShapeError("pearson_r: length mismatch");
    if (xs.size() < 2) throw DataError("pearson_r: need at least 2 pairs");
    const double n = double(xs.size());
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw DataError("pearson_r: degenerate (constant) input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace flare

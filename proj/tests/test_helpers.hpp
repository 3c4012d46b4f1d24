#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "flare/metrics.hpp"
#include "flare/volume.hpp"

namespace flare::testing {

inline Affine identity_affine(std::array<double, 3> spacing = {1, 1, 1}) {
    Affine a{};
    a[0][0] = spacing[0];
    a[1][1] = spacing[1];
    a[2][2] = spacing[2];
    a[3][3] = 1.0;
    return a;
}

inline BinaryMask random_mask(std::mt19937& rng, std::array<int, 3> dims, double fill = 0.3) {
    BinaryMask m;
    m.dims = dims;
    m.data.resize(std::size_t(dims[0]) * dims[1] * dims[2]);
    std::bernoulli_distribution bit(fill);
    for (auto& v : m.data) v = bit(rng) ? 1 : 0;
    return m;
}

inline LabelVolume random_label_volume(std::mt19937& rng, std::array<int, 3> dims,
                                       std::array<double, 3> spacing = {1, 1, 1}) {
    std::uniform_int_distribution<int> label(0, kMaxLabel);
    std::vector<std::uint8_t> vox(std::size_t(dims[0]) * dims[1] * dims[2]);
    for (auto& v : vox) v = std::uint8_t(label(rng));
    return LabelVolume(dims, spacing, identity_affine(spacing), std::move(vox));
}

// Brute-force oracles, deliberately independent of the EDT-based path.

// Min spacing-weighted distance from each voxel to the target set,
// accumulating squared terms in x,y,z order.
inline std::vector<double> brute_distance_field(const BoundarySet& target,
                                                std::array<int, 3> dims,
                                                std::array<double, 3> spacing) {
    std::vector<double> out(std::size_t(dims[0]) * dims[1] * dims[2]);
    std::size_t idx = 0;
    for (int k = 0; k < dims[2]; ++k) {
        for (int j = 0; j < dims[1]; ++j) {
            for (int i = 0; i < dims[0]; ++i) {
                double best = 1e300;
                for (const auto& p : target.voxels) {
                    double dx = (i - p[0]) * spacing[0];
                    double dy = (j - p[1]) * spacing[1];
                    double dz = (k - p[2]) * spacing[2];
                    double d2 = dx * dx + dy * dy + dz * dz;
                    if (d2 < best) best = d2;
                }
                out[idx++] = std::sqrt(best);
            }
        }
    }
    return out;
}

// O(|dG| * |dS|) pairwise NSD oracle.
inline double brute_nsd(const BinaryMask& gt, const BinaryMask& pred,
                        std::array<double, 3> spacing, double tau_mm) {
    BoundarySet bg = extract_boundary(gt);
    BoundarySet bs = extract_boundary(pred);
    if (bg.empty() && bs.empty()) return 1.0;
    if (bg.empty() || bs.empty()) return 0.0;
    double tau2 = tau_mm * tau_mm;
    auto min_d2 = [&](const std::array<int, 3>& p, const BoundarySet& other) {
        double best = 1e300;
        for (const auto& q : other.voxels) {
            double dx = (p[0] - q[0]) * spacing[0];
            double dy = (p[1] - q[1]) * spacing[1];
            double dz = (p[2] - q[2]) * spacing[2];
            double d2 = dx * dx + dy * dy + dz * dz;
            if (d2 < best) best = d2;
        }
        return best;
    };
    std::size_t num = 0;
    for (const auto& p : bg.voxels) num += min_d2(p, bs) <= tau2;
    for (const auto& p : bs.voxels) num += min_d2(p, bg) <= tau2;
    return double(num) / double(bg.size() + bs.size());
}

}  // namespace flare::testing

#pragma once

#include <array>
#include <vector>

#include "flare/volume.hpp"

namespace flare {

// Per-organ NSD boundary tolerance in millimetres. The shipped default
// config is a placeholder; operators supply the normative values.
struct ToleranceTable {
    std::array<double, kNumOrgans> tau_mm;

    double operator[](OrganId organ) const { return tau_mm[organ.value - 1]; }

    // Plain-text "organ name: millimetres" config; all 13 organs required,
    // unknown keys rejected.
    static ToleranceTable load(const std::string& path);
    static ToleranceTable uniform(double tau);
};

struct BoundarySet {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<std::array<int, 3>> voxels;

    bool empty() const { return voxels.empty(); }
    std::size_t size() const { return voxels.size(); }
};

struct OrganAccuracy {
    double dsc = 0.0;
    double nsd = 0.0;
    double gt_volume_cm3 = 0.0;
    double pred_volume_cm3 = 0.0;
};

struct CaseAccuracy {
    std::array<OrganAccuracy, kNumOrgans> organs;

    double mean_dsc() const;
    double mean_nsd() const;
};

// 2|G∩S| / (|G|+|S|); both empty -> 1, one empty -> 0.
double dsc(const BinaryMask& gt, const BinaryMask& pred);

// Mask voxels with at least one 6-connected background neighbour; the
// array border counts as background.
BoundarySet extract_boundary(const BinaryMask& mask);

// Exact anisotropic Euclidean distance (mm) from every voxel centre to the
// nearest target voxel centre. Throws DataError on an empty target.
std::vector<double> distance_to_set(const BoundarySet& target, std::array<int, 3> dims,
                                    std::array<double, 3> spacing);

// (|∂G ∩ B_∂S^τ| + |∂S ∩ B_∂G^τ|) / (|∂G| + |∂S|) with centre-to-centre
// distances; both empty -> 1, one empty -> 0.
double nsd(const BinaryMask& gt, const BinaryMask& pred, std::array<double, 3> spacing,
           double tau_mm);

double organ_volume_cm3(const BinaryMask& mask, std::array<double, 3> spacing);

CaseAccuracy evaluate_case(const LabelVolume& gt, const LabelVolume& pred,
                           const ToleranceTable& tol);

// Sample Pearson correlation; throws DataError on constant input or
// length mismatch.
double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace flare

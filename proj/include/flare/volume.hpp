#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "flare/errors.hpp"

namespace flare {

// Organ labels 1..13 in the challenge listing order; 0 is background.
constexpr int kNumOrgans = 13;
constexpr std::uint8_t kMaxLabel = 13;

struct OrganId {
    int value;  // 1..13

    const char* name() const;
    static OrganId from_name(const std::string& name);
    static std::array<OrganId, kNumOrgans> all();

    bool operator==(const OrganId&) const = default;
};

using Affine = std::array<std::array<double, 4>, 4>;

// Dense multi-label voxel grid with physical metadata. Voxel (i,j,k) is
// stored at index i + nx*(j + ny*k); world position is affine * (i,j,k,1).
class LabelVolume {
public:
    LabelVolume() = default;
    LabelVolume(std::array<int, 3> dims, std::array<double, 3> spacing,
                const Affine& affine, std::vector<std::uint8_t> voxels);

    const std::array<int, 3>& dims() const { return dims_; }
    const std::array<double, 3>& spacing() const { return spacing_; }
    const Affine& affine() const { return affine_; }
    const std::vector<std::uint8_t>& voxels() const { return voxels_; }

    std::size_t size() const { return voxels_.size(); }
    std::uint8_t at(int i, int j, int k) const {
        return voxels_[static_cast<std::size_t>(i) +
                       static_cast<std::size_t>(dims_[0]) *
                           (static_cast<std::size_t>(j) +
                            static_cast<std::size_t>(dims_[1]) * k)];
    }

    // 3-letter axis code (e.g. "RAS", "LPS") from the dominant axis of each
    // affine column. Throws DataError on ambiguous (oblique) affines.
    std::string orientation() const;

private:
    std::array<int, 3> dims_{0, 0, 0};
    std::array<double, 3> spacing_{1, 1, 1};
    Affine affine_{};
    std::vector<std::uint8_t> voxels_;
};

// Binary mask sharing a volume's grid.
struct BinaryMask {
    std::array<int, 3> dims{0, 0, 0};
    std::vector<std::uint8_t> data;  // 0 or 1

    std::size_t popcount() const;
    bool at(int i, int j, int k) const {
        return data[static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(dims[0]) *
                        (static_cast<std::size_t>(j) +
                         static_cast<std::size_t>(dims[1]) * k)] != 0;
    }
};

// NIfTI-1 single-file I/O. Reads both endiannesses and integer-valued
// datatypes {uint8, int16, uint16, int32, float32}; writes little-endian
// uint8. Gzip container selected by a ".gz" path suffix.
LabelVolume load_volume(const std::string& path);
void write_volume(const LabelVolume& vol, const std::string& path);

// Reorders/flips voxel axes so the orientation code becomes RAS while
// keeping every voxel's world coordinate fixed. Oblique affines whose
// dominant axis is ambiguous are rejected.
LabelVolume to_canonical_ras(const LabelVolume& vol);

BinaryMask organ_mask(const LabelVolume& vol, OrganId organ);

}  // namespace flare

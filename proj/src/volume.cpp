#include "flare/volume.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

namespace flare {
namespace {

const char* kOrganNames[kNumOrgans] = {
    "liver",
    "right kidney",
    "spleen",
    "pancreas",
    "aorta",
    "inferior vena cava",
    "right adrenal gland",
    "left adrenal gland",
    "gallbladder",
    "esophagus",
    "stomach",
    "duodenum",
    "left kidney",
};

#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1;
    float intent_p2;
    float intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max;
    float cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax;
    std::int32_t glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b;
    float quatern_c;
    float quatern_d;
    float qoffset_x;
    float qoffset_y;
    float qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtUint16 = 512;

template <typename T>
void byteswap(T& v) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    std::reverse(p, p + sizeof(T));
}

void swap_header(Nifti1Header& h) {
    byteswap(h.sizeof_hdr);
    byteswap(h.extents);
    byteswap(h.session_error);
    for (auto& d : h.dim) byteswap(d);
    byteswap(h.intent_p1);
    byteswap(h.intent_p2);
    byteswap(h.intent_p3);
    byteswap(h.intent_code);
    byteswap(h.datatype);
    byteswap(h.bitpix);
    byteswap(h.slice_start);
    for (auto& p : h.pixdim) byteswap(p);
    byteswap(h.vox_offset);
    byteswap(h.scl_slope);
    byteswap(h.scl_inter);
    byteswap(h.slice_end);
    byteswap(h.cal_max);
    byteswap(h.cal_min);
    byteswap(h.slice_duration);
    byteswap(h.toffset);
    byteswap(h.glmax);
    byteswap(h.glmin);
    byteswap(h.qform_code);
    byteswap(h.sform_code);
    byteswap(h.quatern_b);
    byteswap(h.quatern_c);
    byteswap(h.quatern_d);
    byteswap(h.qoffset_x);
    byteswap(h.qoffset_y);
    byteswap(h.qoffset_z);
    for (auto& s : h.srow_x) byteswap(s);
    for (auto& s : h.srow_y) byteswap(s);
    for (auto& s : h.srow_z) byteswap(s);
}

struct GzFile {
    gzFile f = nullptr;
    explicit GzFile(gzFile fp) : f(fp) {}
    ~GzFile() {
        if (f) gzclose(f);
    }
    GzFile(const GzFile&) = delete;
    GzFile& operator=(const GzFile&) = delete;
};

Affine affine_from_qform(const Nifti1Header& h) {
    double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    double a2 = 1.0 - (b * b + c * c + d * d);
    double a = a2 > 0 ? std::sqrt(a2) : 0.0;
    double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    double sx = h.pixdim[1], sy = h.pixdim[2], sz = h.pixdim[3];
    Affine m{};
    m[0][0] = (a * a + b * b - c * c - d * d) * sx;
    m[0][1] = (2 * b * c - 2 * a * d) * sy;
    m[0][2] = (2 * b * d + 2 * a * c) * sz * qfac;
    m[1][0] = (2 * b * c + 2 * a * d) * sx;
    m[1][1] = (a * a + c * c - b * b - d * d) * sy;
    m[1][2] = (2 * c * d - 2 * a * b) * sz * qfac;
    m[2][0] = (2 * b * d - 2 * a * c) * sx;
    m[2][1] = (2 * c * d + 2 * a * b) * sy;
    m[2][2] = (a * a + d * d - c * c - b * b) * sz * qfac;
    m[0][3] = h.qoffset_x;
    m[1][3] = h.qoffset_y;
    m[2][3] = h.qoffset_z;
    m[3][3] = 1.0;
    return m;
}

double det3(const Affine& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// Dominant world axis of affine column j, with its sign. Throws on ties.
std::pair<int, int> dominant_axis(const Affine& m, int col) {
    double best = -1.0;
    int axis = -1;
    for (int i = 0; i < 3; ++i) {
        double v = std::abs(m[i][col]);
        if (v > best) {
            best = v;
            axis = i;
        }
    }
    for (int i = 0; i < 3; ++i) {
        if (i != axis && std::abs(m[i][col]) == best) {
            throw DataError("unsupported orientation: oblique affine with ambiguous dominant axis");
        }
    }
    if (best == 0.0) {
        throw DataError("unsupported orientation: degenerate affine column");
    }
    return {axis, m[axis][col] >= 0 ? 1 : -1};
}

template <typename T>
std::vector<std::uint8_t> cast_voxels(const std::vector<char>& raw, std::size_t n,
                                      bool swapped) {
    std::vector<std::uint8_t> out(n);
    const T* src = reinterpret_cast<const T*>(raw.data());
    for (std::size_t i = 0; i < n; ++i) {
        T v = src[i];
        if (swapped) byteswap(v);
        double d = static_cast<double>(v);
        if (d < 0 || d > 255 || d != std::floor(d)) {
            throw DataError("unsupported datatype: non-integer or out-of-range voxel value at index " +
                            std::to_string(i));
        }
        out[i] = static_cast<std::uint8_t>(d);
    }
    return out;
}

}  // namespace

const char* OrganId::name() const { return kOrganNames[value - 1]; }

OrganId OrganId::from_name(const std::string& name) {
    for (int i = 0; i < kNumOrgans; ++i) {
        if (name == kOrganNames[i]) return OrganId{i + 1};
    }
    throw ConfigError("unknown organ name: " + name);
}

std::array<OrganId, kNumOrgans> OrganId::all() {
    std::array<OrganId, kNumOrgans> out;
    for (int i = 0; i < kNumOrgans; ++i) out[i] = OrganId{i + 1};
    return out;
}

LabelVolume::LabelVolume(std::array<int, 3> dims, std::array<double, 3> spacing,
                         const Affine& affine, std::vector<std::uint8_t> voxels)
    : dims_(dims), spacing_(spacing), affine_(affine), voxels_(std::move(voxels)) {
    for (int d : dims_) {
        if (d <= 0) throw DataError("volume dims must be positive");
    }
    for (double s : spacing_) {
        if (!(s > 0) || !std::isfinite(s)) throw DataError("voxel spacing must be positive and finite");
    }
    if (det3(affine_) == 0.0) throw DataError("affine upper 3x3 block is singular");
    std::size_t n = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    if (voxels_.size() != n) throw DataError("voxel buffer size does not match dims");
    for (std::size_t i = 0; i < n; ++i) {
        if (voxels_[i] > kMaxLabel) {
            throw DataError("invalid label " + std::to_string(int(voxels_[i])) +
                            " at voxel index " + std::to_string(i));
        }
    }
}

std::string LabelVolume::orientation() const {
    static const char* pos = "RAS";
    static const char* neg = "LPI";
    std::string code;
    for (int col = 0; col < 3; ++col) {
        auto [axis, sign] = dominant_axis(affine_, col);
        code += (sign > 0 ? pos : neg)[axis];
    }
    return code;
}

std::size_t BinaryMask::popcount() const {
    std::size_t n = 0;
    for (auto v : data) n += v != 0;
    return n;
}

LabelVolume load_volume(const std::string& path) {
    if (!std::filesystem::exists(path)) {
        throw DataError("file not found: " + path);
    }
    // gzopen reads plain files transparently, so one path handles both.
    GzFile in(gzopen(path.c_str(), "rb"));
    if (!in.f) throw DataError("cannot open " + path);

    Nifti1Header h{};
    if (gzread(in.f, &h, sizeof(h)) != int(sizeof(h))) {
        throw FormatError("truncated NIfTI header in " + path);
    }
    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        auto probe = h.sizeof_hdr;
        byteswap(probe);
        if (probe != 348) {
            throw FormatError("not a NIfTI-1 file (sizeof_hdr != 348): " + path);
        }
        swapped = true;
        swap_header(h);
    }
    if (std::strncmp(h.magic, "n+1", 3) != 0) {
        throw FormatError("unsupported NIfTI magic (expect single-file \"n+1\"): " + path);
    }
    if (h.dim[0] < 3 || h.dim[0] > 4) {
        throw FormatError("expected 3D volume, got dim[0]=" + std::to_string(h.dim[0]));
    }
    if (h.dim[0] == 4 && h.dim[4] != 1) {
        throw FormatError("4D volumes are not supported");
    }
    std::array<int, 3> dims{h.dim[1], h.dim[2], h.dim[3]};
    for (int d : dims) {
        if (d <= 0) throw FormatError("non-positive dimension in header");
    }
    std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];

    int bytes_per;
    switch (h.datatype) {
        case kDtUint8:
            bytes_per = 1;
            break;
        case kDtInt16:
        case kDtUint16:
            bytes_per = 2;
            break;
        case kDtInt32:
        case kDtFloat32:
            bytes_per = 4;
            break;
        default:
            throw DataError("unsupported datatype code " + std::to_string(h.datatype));
    }

    long offset = static_cast<long>(h.vox_offset);
    if (offset < 348) throw FormatError("vox_offset below header size");
    if (gzseek(in.f, offset, SEEK_SET) < 0) {
        throw FormatError("cannot seek to voxel data");
    }
    std::vector<char> raw(n * bytes_per);
    std::size_t got = 0;
    while (got < raw.size()) {
        int r = gzread(in.f, raw.data() + got, static_cast<unsigned>(raw.size() - got));
        if (r <= 0) throw FormatError("truncated voxel data in " + path);
        got += static_cast<std::size_t>(r);
    }

    std::vector<std::uint8_t> voxels;
    switch (h.datatype) {
        case kDtUint8:
            voxels.assign(raw.begin(), raw.end());
            break;
        case kDtInt16:
            voxels = cast_voxels<std::int16_t>(raw, n, swapped);
            break;
        case kDtUint16:
            voxels = cast_voxels<std::uint16_t>(raw, n, swapped);
            break;
        case kDtInt32:
            voxels = cast_voxels<std::int32_t>(raw, n, swapped);
            break;
        case kDtFloat32:
            voxels = cast_voxels<float>(raw, n, swapped);
            break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (voxels[i] > kMaxLabel) {
            throw DataError("invalid label " + std::to_string(int(voxels[i])) +
                            " at voxel index " + std::to_string(i) + " in " + path);
        }
    }

    Affine affine{};
    if (h.sform_code > 0) {
        for (int j = 0; j < 4; ++j) {
            affine[0][j] = h.srow_x[j];
            affine[1][j] = h.srow_y[j];
            affine[2][j] = h.srow_z[j];
        }
        affine[3][3] = 1.0;
    } else if (h.qform_code > 0) {
        affine = affine_from_qform(h);
    } else {
        affine[0][0] = h.pixdim[1];
        affine[1][1] = h.pixdim[2];
        affine[2][2] = h.pixdim[3];
        affine[3][3] = 1.0;
    }

    std::array<double, 3> spacing;
    for (int j = 0; j < 3; ++j) {
        if (h.pixdim[j + 1] > 0) {
            spacing[j] = h.pixdim[j + 1];
        } else {
            spacing[j] = std::sqrt(affine[0][j] * affine[0][j] + affine[1][j] * affine[1][j] +
                                   affine[2][j] * affine[2][j]);
        }
    }
    return LabelVolume(dims, spacing, affine, std::move(voxels));
}

void write_volume(const LabelVolume& vol, const std::string& path) {
    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    h.dim[1] = static_cast<std::int16_t>(vol.dims()[0]);
    h.dim[2] = static_cast<std::int16_t>(vol.dims()[1]);
    h.dim[3] = static_cast<std::int16_t>(vol.dims()[2]);
    for (int i = 4; i < 8; ++i) h.dim[i] = 1;
    h.datatype = kDtUint8;
    h.bitpix = 8;
    h.pixdim[0] = 1.0f;
    for (int j = 0; j < 3; ++j) h.pixdim[j + 1] = static_cast<float>(vol.spacing()[j]);
    h.vox_offset = 352.0f;
    h.scl_slope = 1.0f;
    h.xyzt_units = 2;  // NIFTI_UNITS_MM
    h.qform_code = 0;
    h.sform_code = 1;
    for (int j = 0; j < 4; ++j) {
        h.srow_x[j] = static_cast<float>(vol.affine()[0][j]);
        h.srow_y[j] = static_cast<float>(vol.affine()[1][j]);
        h.srow_z[j] = static_cast<float>(vol.affine()[2][j]);
    }
    std::memcpy(h.magic, "n+1\0", 4);

    bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    // "T" writes transparently (no gzip wrapper) for plain .nii output.
    GzFile out(gzopen(path.c_str(), gz ? "wb" : "wbT"));
    if (!out.f) throw DataError("cannot open for writing: " + path);
    const char pad[4] = {0, 0, 0, 0};
    if (gzwrite(out.f, &h, sizeof(h)) != int(sizeof(h)) || gzwrite(out.f, pad, 4) != 4) {
        throw DataError("write error: " + path);
    }
    const auto& vox = vol.voxels();
    std::size_t written = 0;
    while (written < vox.size()) {
        unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(vox.size() - written, 1u << 26));
        int w = gzwrite(out.f, vox.data() + written, chunk);
        if (w <= 0) throw DataError("write error: " + path);
        written += static_cast<std::size_t>(w);
    }
}

LabelVolume to_canonical_ras(const LabelVolume& vol) {
    const Affine& m = vol.affine();
    if (det3(m) == 0.0) {
        throw DataError("unsupported orientation: singular affine");
    }
    // perm[world_axis] = (voxel_axis, sign)
    std::array<int, 3> src_axis{-1, -1, -1};
    std::array<int, 3> sign{0, 0, 0};
    for (int col = 0; col < 3; ++col) {
        auto [axis, s] = dominant_axis(m, col);
        if (src_axis[axis] != -1) {
            throw DataError("unsupported orientation: two voxel axes share a dominant world axis");
        }
        src_axis[axis] = col;
        sign[axis] = s;
    }

    const auto& d = vol.dims();
    std::array<int, 3> ndims{d[src_axis[0]], d[src_axis[1]], d[src_axis[2]]};
    std::array<double, 3> nspacing{vol.spacing()[src_axis[0]], vol.spacing()[src_axis[1]],
                                   vol.spacing()[src_axis[2]]};

    std::vector<std::uint8_t> out(vol.size());
    std::array<int, 3> oidx;
    for (int k = 0; k < ndims[2]; ++k) {
        for (int j = 0; j < ndims[1]; ++j) {
            for (int i = 0; i < ndims[0]; ++i) {
                std::array<int, 3> nidx{i, j, k};
                for (int a = 0; a < 3; ++a) {
                    int v = nidx[a];
                    if (sign[a] < 0) v = ndims[a] - 1 - v;
                    oidx[src_axis[a]] = v;
                }
                out[static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(ndims[0]) *
                        (static_cast<std::size_t>(j) + static_cast<std::size_t>(ndims[1]) * k)] =
                    vol.at(oidx[0], oidx[1], oidx[2]);
            }
        }
    }

    // new_affine = old_affine * T where T maps new voxel coords to old ones:
    // old[src_axis[a]] = sign[a] > 0 ? new[a] : ndims[a]-1-new[a].
    Affine t{};
    t[3][3] = 1.0;
    for (int a = 0; a < 3; ++a) {
        if (sign[a] > 0) {
            t[src_axis[a]][a] = 1.0;
        } else {
            t[src_axis[a]][a] = -1.0;
            t[src_axis[a]][3] = ndims[a] - 1.0;
        }
    }
    Affine na{};
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            double acc = 0;
            for (int k2 = 0; k2 < 4; ++k2) acc += m[r][k2] * t[k2][c];
            na[r][c] = acc;
        }
    }
    return LabelVolume(ndims, nspacing, na, std::move(out));
}

BinaryMask organ_mask(const LabelVolume& vol, OrganId organ) {
    BinaryMask mask;
    mask.dims = vol.dims();
    mask.data.resize(vol.size());
    const auto& vox = vol.voxels();
    for (std::size_t i = 0; i < vox.size(); ++i) {
        mask.data[i] = vox[i] == organ.value ? 1 : 0;
    }
    return mask;
}

}  // namespace flare

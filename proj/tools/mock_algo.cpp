// Mock segmentation "algorithms" for tests and demos. Honors the harness
// contract: <mode> <case-input> <output-dir>, writes <case-id>.nii.gz.
//
// Modes:
//   identity  copy the input labels unchanged
//   dilate    one-voxel 6-connected dilation of every organ label
//   crash     exit nonzero without producing output
//   hang      loop until killed
//   empty     all-background prediction
//   silent    exit 0 without writing the expected output file

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include "flare/volume.hpp"

namespace fs = std::filesystem;

namespace {

std::string case_id_from(const std::string& input) {
    std::string name = fs::path(input).filename().string();
    for (const char* suffix : {".nii.gz", ".nii"}) {
        std::size_t len = std::string(suffix).size();
        if (name.size() > len && name.compare(name.size() - len, len, suffix) == 0) {
            return name.substr(0, name.size() - len);
        }
    }
    return name;
}

flare::LabelVolume dilate_labels(const flare::LabelVolume& vol) {
    auto dims = vol.dims();
    std::vector<std::uint8_t> out = vol.voxels();
    const int nx = dims[0], ny = dims[1], nz = dims[2];
    auto idx = [&](int i, int j, int k) {
        return std::size_t(i) + std::size_t(nx) * (j + std::size_t(ny) * k);
    };
    for (int k = 0; k < nz; ++k) {
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                if (vol.at(i, j, k) != 0) continue;
                const int di[6] = {-1, 1, 0, 0, 0, 0};
                const int dj[6] = {0, 0, -1, 1, 0, 0};
                const int dk[6] = {0, 0, 0, 0, -1, 1};
                for (int d = 0; d < 6; ++d) {
                    int ii = i + di[d], jj = j + dj[d], kk = k + dk[d];
                    if (ii < 0 || ii >= nx || jj < 0 || jj >= ny || kk < 0 || kk >= nz) continue;
                    std::uint8_t v = vol.at(ii, jj, kk);
                    if (v != 0) {
                        out[idx(i, j, k)] = v;
                        break;
                    }
                }
            }
        }
    }
    return flare::LabelVolume(dims, vol.spacing(), vol.affine(), std::move(out));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 4) {
        std::cerr << "usage: mock_algo <mode> <case-input> <output-dir>\n";
        return 2;
    }
    std::string mode = argv[1];
    std::string input = argv[2];
    std::string out_dir = argv[3];

    if (mode == "crash") return 1;
    if (mode == "hang") {
        while (true) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    if (mode == "silent") return 0;

    try {
        flare::LabelVolume vol = flare::load_volume(input);
        std::string out = (fs::path(out_dir) / (case_id_from(input) + ".nii.gz")).string();
        if (mode == "identity") {
            flare::write_volume(vol, out);
        } else if (mode == "dilate") {
            flare::write_volume(dilate_labels(vol), out);
        } else if (mode == "empty") {
            std::vector<std::uint8_t> zeros(vol.size(), 0);
            flare::write_volume(
                flare::LabelVolume(vol.dims(), vol.spacing(), vol.affine(), std::move(zeros)), out);
        } else {
            std::cerr << "unknown mode: " << mode << "\n";
            return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "mock_algo: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "flare/harness.hpp"
#include "flare/metrics.hpp"
#include "flare/ranking.hpp"
#include "flare/stats.hpp"
#include "flare/volume.hpp"

namespace py = pybind11;
using namespace flare;

namespace {

BinaryMask mask_from_array(const py::array_t<std::uint8_t, py::array::forcecast>& arr) {
    if (arr.ndim() != 3) throw ShapeError("mask must be a 3D array");
    BinaryMask m;
    m.dims = {int(arr.shape(0)), int(arr.shape(1)), int(arr.shape(2))};
    m.data.resize(std::size_t(m.dims[0]) * m.dims[1] * m.dims[2]);
    auto r = arr.unchecked<3>();
    // numpy arrays are C-order (k fastest last); our layout is i-fastest
    std::size_t idx = 0;
    for (int k = 0; k < m.dims[2]; ++k)
        for (int j = 0; j < m.dims[1]; ++j)
            for (int i = 0; i < m.dims[0]; ++i) m.data[idx++] = r(i, j, k) != 0;
    return m;
}

py::array_t<double> field_to_array(const std::vector<double>& field, std::array<int, 3> dims) {
    py::array_t<double> out({dims[0], dims[1], dims[2]});
    auto w = out.mutable_unchecked<3>();
    std::size_t idx = 0;
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) w(i, j, k) = field[idx++];
    return out;
}

LabelVolume volume_from_array(const py::array_t<std::uint8_t, py::array::forcecast>& arr,
                              std::array<double, 3> spacing) {
    if (arr.ndim() != 3) throw ShapeError("labels must be a 3D array");
    std::array<int, 3> dims{int(arr.shape(0)), int(arr.shape(1)), int(arr.shape(2))};
    std::vector<std::uint8_t> vox(std::size_t(dims[0]) * dims[1] * dims[2]);
    auto r = arr.unchecked<3>();
    std::size_t idx = 0;
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i) vox[idx++] = r(i, j, k);
    Affine aff{};
    aff[0][0] = spacing[0];
    aff[1][1] = spacing[1];
    aff[2][2] = spacing[2];
    aff[3][3] = 1.0;
    return LabelVolume(dims, spacing, aff, std::move(vox));
}

py::array_t<std::uint8_t> volume_to_array(const LabelVolume& vol) {
    auto d = vol.dims();
    py::array_t<std::uint8_t> out({d[0], d[1], d[2]});
    auto w = out.mutable_unchecked<3>();
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) w(i, j, k) = vol.at(i, j, k);
    return out;
}

MetricMatrix matrix_from_python(const std::vector<std::string>& algorithms,
                                const std::vector<std::string>& cases,
                                const py::array_t<double, py::array::forcecast>& values) {
    if (values.ndim() != 3 || values.shape(2) != kNumMetrics) {
        throw ShapeError("values must have shape (n_algorithms, n_cases, 5)");
    }
    if (std::size_t(values.shape(0)) != algorithms.size() ||
        std::size_t(values.shape(1)) != cases.size()) {
        throw ShapeError("values shape does not match algorithm/case lists");
    }
    MetricMatrix m;
    m.algorithms = algorithms;
    m.cases = cases;
    auto r = values.unchecked<3>();
    m.values.assign(algorithms.size(), std::vector<std::optional<MetricTuple>>(cases.size()));
    for (std::size_t a = 0; a < algorithms.size(); ++a) {
        for (std::size_t c = 0; c < cases.size(); ++c) {
            MetricTuple t;
            for (int mi = 0; mi < kNumMetrics; ++mi) t[mi] = r(a, c, mi);
            m.values[a][c] = t;
        }
    }
    return m;
}

}  // namespace

PYBIND11_MODULE(_flare, m) {
    m.doc() = "Segmentation benchmark core: DSC/NSD metrics, AUC reductions, "
              "rank aggregation, and bootstrap stability";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<DataError>(m, "DataError");

    py::class_<LabelVolume>(m, "LabelVolume")
        .def(py::init(&volume_from_array), py::arg("labels"), py::arg("spacing"))
        .def_property_readonly("dims", &LabelVolume::dims)
        .def_property_readonly("spacing", &LabelVolume::spacing)
        .def_property_readonly("affine", &LabelVolume::affine)
        .def_property_readonly("orientation", &LabelVolume::orientation)
        .def("to_numpy", &volume_to_array);

    m.def("load_volume", &load_volume, py::arg("path"));
    m.def("write_volume", &write_volume, py::arg("volume"), py::arg("path"));
    m.def("to_canonical_ras", &to_canonical_ras, py::arg("volume"));
    m.def(
        "organ_mask",
        [](const LabelVolume& vol, int organ) {
            BinaryMask mk = organ_mask(vol, OrganId{organ});
            std::vector<double> f(mk.data.begin(), mk.data.end());
            return field_to_array(f, mk.dims);
        },
        py::arg("volume"), py::arg("organ"));
    m.def("organ_names", [] {
        std::vector<std::string> names;
        for (OrganId o : OrganId::all()) names.push_back(o.name());
        return names;
    });

    m.def(
        "dsc",
        [](py::array_t<std::uint8_t, py::array::forcecast> gt,
           py::array_t<std::uint8_t, py::array::forcecast> pred) {
            return dsc(mask_from_array(gt), mask_from_array(pred));
        },
        py::arg("gt"), py::arg("pred"));
    m.def(
        "nsd",
        [](py::array_t<std::uint8_t, py::array::forcecast> gt,
           py::array_t<std::uint8_t, py::array::forcecast> pred, std::array<double, 3> spacing,
           double tau_mm) {
            return nsd(mask_from_array(gt), mask_from_array(pred), spacing, tau_mm);
        },
        py::arg("gt"), py::arg("pred"), py::arg("spacing"), py::arg("tau_mm"));
    m.def(
        "distance_to_mask",
        [](py::array_t<std::uint8_t, py::array::forcecast> target,
           std::array<double, 3> spacing) {
            BinaryMask mk = mask_from_array(target);
            auto field = distance_to_set(extract_boundary(mk), mk.dims, spacing);
            return field_to_array(field, mk.dims);
        },
        py::arg("target"), py::arg("spacing"),
        "Distance (mm) from every voxel to the target mask boundary");
    m.def(
        "organ_volume_cm3",
        [](py::array_t<std::uint8_t, py::array::forcecast> mask, std::array<double, 3> spacing) {
            return organ_volume_cm3(mask_from_array(mask), spacing);
        },
        py::arg("mask"), py::arg("spacing"));
    m.def("pearson_r", &pearson_r, py::arg("xs"), py::arg("ys"));

    m.def(
        "auc_gpu",
        [](const std::vector<std::array<double, 3>>& samples, double elapsed_s) {
            ResourceTrace t;
            for (auto& s : samples) t.samples.push_back({s[0], s[1], s[2]});
            t.elapsed_s = elapsed_s;
            return auc_gpu(t);
        },
        py::arg("samples"), py::arg("elapsed_s"),
        "samples: list of (t, gpu_mb, cpu_pct); MB*s above the 2048 MB tolerance");
    m.def(
        "auc_cpu",
        [](const std::vector<std::array<double, 3>>& samples, double elapsed_s) {
            ResourceTrace t;
            for (auto& s : samples) t.samples.push_back({s[0], s[1], s[2]});
            t.elapsed_s = elapsed_s;
            return auc_cpu(t);
        },
        py::arg("samples"), py::arg("elapsed_s"));
    m.attr("PENALTY") = py::make_tuple(0.0, 0.0, kPenaltyTimeS, kPenaltyAucGpu, kPenaltyAucCpu);

    m.def(
        "rank_leaderboard",
        [](const std::vector<std::string>& algorithms, const std::vector<std::string>& cases,
           py::array_t<double, py::array::forcecast> values) {
            Leaderboard lb = rank_leaderboard(matrix_from_python(algorithms, cases, values));
            py::list out;
            for (const auto& e : lb.entries) {
                out.append(py::make_tuple(e.final_rank, e.algorithm, e.aggregate_score));
            }
            return out;
        },
        py::arg("algorithms"), py::arg("cases"), py::arg("values"),
        "values shape (A, C, 5) ordered (dsc, nsd, time_s, auc_gpu, auc_cpu); "
        "returns [(final_rank, algorithm, aggregate_score)] sorted by score");
    m.def("kendall_tau", &kendall_tau, py::arg("order_a"), py::arg("order_b"));
    m.def(
        "wilcoxon_signed_rank",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            auto res = wilcoxon_signed_rank(a, b);
            return py::make_tuple(res.statistic, res.p_value);
        },
        py::arg("paired_a"), py::arg("paired_b"));
    m.def(
        "bootstrap_rankings",
        [](const std::vector<std::string>& algorithms, const std::vector<std::string>& cases,
           py::array_t<double, py::array::forcecast> values, int n_boot, std::uint64_t seed) {
            auto rep = bootstrap_rankings(matrix_from_python(algorithms, cases, values), n_boot,
                                          seed);
            py::dict out;
            out["n_boot"] = rep.n_boot;
            out["rng_seed"] = rep.rng_seed;
            out["tau_overall"] = rep.tau_overall;
            py::dict per_metric;
            for (int mi = 0; mi < kNumMetrics; ++mi) {
                per_metric[kMetricNames[mi]] = rep.tau_per_metric[mi];
            }
            out["tau_per_metric"] = per_metric;
            py::dict ranks;
            for (std::size_t a = 0; a < rep.algorithms.size(); ++a) {
                ranks[rep.algorithms[a].c_str()] = rep.rank_samples[a];
            }
            out["rank_samples"] = ranks;
            return out;
        },
        py::arg("algorithms"), py::arg("cases"), py::arg("values"), py::arg("n_boot") = 1000,
        py::arg("seed") = 20220822);
}

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flare/metrics.hpp"
#include "flare/profiler.hpp"
#include "flare/ranking.hpp"
#include "flare/stats.hpp"

namespace flare {

struct CaseEntry {
    std::string case_id;
    std::string image_path;
    std::string gt_label_path;
    std::map<std::string, std::string> metadata;  // sex, age_group, manufacturer, region
};

// Line-oriented CSV manifest; paths are resolved relative to the manifest
// file. Header: case_id,image_path,gt_label_path[,sex,age_group,manufacturer,region]
struct CaseManifest {
    std::vector<CaseEntry> cases;

    static CaseManifest load(const std::string& path);
};

struct CaseOutcome {
    std::string case_id;
    RunStatus status = RunStatus::failed;
    double time_s = 0.0;
    double auc_gpu = 0.0;
    double auc_cpu = 0.0;
    std::optional<CaseAccuracy> accuracy;  // absent for stuck/failed runs
    std::string note;                      // error detail for failed cases

    MetricTuple metric_tuple() const;
};

struct EvaluationRun {
    std::string run_id;
    std::string algorithm_name;
    std::vector<std::string> command;
    std::vector<CaseOutcome> outcomes;

    void save_json(const std::string& path) const;
    static EvaluationRun load_json(const std::string& path);
    void save_case_csv(const std::string& path) const;
};

struct EvaluateOptions {
    double timeout_s = 3600.0;
    ResourceProvider* sampler = nullptr;  // defaults to FLARE_SAMPLER env selection
};

// Runs one algorithm over every manifest case: profiled execution, output
// load + RAS canonicalization, per-organ metrics, penalties on
// stuck/failed cases. Artifacts land under out_dir/<algorithm>/<case>/.
EvaluationRun cmd_evaluate(const CaseManifest& manifest, const std::string& algorithm_name,
                           const std::vector<std::string>& command, const ToleranceTable& tol,
                           const std::string& out_dir, const EvaluateOptions& opts = {});

struct RankOutput {
    MetricMatrix matrix;
    Leaderboard leaderboard;
    BootstrapReport bootstrap;
};

// Assembles the metric matrix from runs (which must share a case set),
// fills penalties, ranks, and bootstraps.
RankOutput cmd_rank(const std::vector<EvaluationRun>& runs, int n_boot = 1000,
                    std::uint64_t seed = 20220822);

struct SubgroupRow {
    std::string group;
    std::size_t n_cases;
    double median_dsc, iqr_lo_dsc, iqr_hi_dsc;
    double median_nsd, iqr_lo_nsd, iqr_hi_nsd;
};

// Median and IQR of per-case mean DSC/NSD per metadata group.
std::vector<SubgroupRow> cmd_subgroup(const EvaluationRun& run, const CaseManifest& manifest,
                                      const std::string& key);
void save_subgroup_csv(const std::vector<SubgroupRow>& rows, const std::string& key,
                       const std::string& path);

struct OrganVolumeReport {
    OrganId organ;
    std::vector<double> gt_cm3;
    std::vector<double> pred_cm3;
    std::optional<double> pearson;  // absent when variance is degenerate
};

std::vector<OrganVolumeReport> cmd_volumes(const EvaluationRun& run);
void save_volume_csv(const std::vector<OrganVolumeReport>& reports, const std::string& path);

}  // namespace flare

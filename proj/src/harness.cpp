#include "flare/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace flare {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string tok;
    std::istringstream in(line);
    while (std::getline(in, tok, ',')) {
        if (!tok.empty() && tok.back() == '\r') tok.pop_back();
        out.push_back(tok);
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

const std::set<std::string> kMetadataKeys{"sex", "age_group", "manufacturer", "region"};
const std::set<std::string> kAgeGroups{"0-50", "51-70", "70+"};

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * double(v.size() - 1);
    std::size_t lo = std::size_t(std::floor(pos));
    std::size_t hi = std::size_t(std::ceil(pos));
    double frac = pos - double(lo);
    return v[lo] * (1 - frac) + v[hi] * frac;
}

}  // namespace

CaseManifest CaseManifest::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest: " + path);
    fs::path base = fs::path(path).parent_path();

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty manifest: " + path);
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "case_id" || header[1] != "image_path" ||
        header[2] != "gt_label_path") {
        throw ConfigError("manifest header must start with case_id,image_path,gt_label_path");
    }
    for (std::size_t i = 3; i < header.size(); ++i) {
        if (!kMetadataKeys.count(header[i])) {
            throw ConfigError("unknown manifest column: " + header[i]);
        }
    }

    CaseManifest m;
    std::set<std::string> seen;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() < 3) {
            throw ConfigError("manifest line " + std::to_string(lineno) + ": too few fields");
        }
        CaseEntry e;
        e.case_id = fields[0];
        if (!seen.insert(e.case_id).second) {
            throw ConfigError("duplicate case_id in manifest: " + e.case_id);
        }
        auto resolve = [&](const std::string& p) {
            fs::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        e.image_path = resolve(fields[1]);
        e.gt_label_path = resolve(fields[2]);
        for (const auto* p : {&e.image_path, &e.gt_label_path}) {
            if (!fs::exists(*p)) {
                throw ConfigError("manifest references missing file: " + *p);
            }
        }
        for (std::size_t i = 3; i < header.size() && i < fields.size(); ++i) {
            if (fields[i].empty()) continue;
            if (header[i] == "age_group" && !kAgeGroups.count(fields[i])) {
                throw ConfigError("manifest line " + std::to_string(lineno) +
                                  ": age_group must be one of 0-50, 51-70, 70+");
            }
            e.metadata[header[i]] = fields[i];
        }
        m.cases.push_back(std::move(e));
    }
    return m;
}

MetricTuple CaseOutcome::metric_tuple() const {
    if (status != RunStatus::completed || !accuracy.has_value()) return kPenaltyTuple;
    return {accuracy->mean_dsc(), accuracy->mean_nsd(), time_s, auc_gpu, auc_cpu};
}

void EvaluationRun::save_json(const std::string& path) const {
    nlohmann::json j;
    j["run_id"] = run_id;
    j["algorithm"] = algorithm_name;
    j["command"] = command;
    auto& arr = j["cases"] = nlohmann::json::array();
    for (const auto& o : outcomes) {
        nlohmann::json c;
        c["case_id"] = o.case_id;
        c["status"] = to_string(o.status);
        c["time_s"] = o.time_s;
        c["auc_gpu"] = o.auc_gpu;
        c["auc_cpu"] = o.auc_cpu;
        if (!o.note.empty()) c["note"] = o.note;
        if (o.accuracy.has_value()) {
            auto& organs = c["organs"] = nlohmann::json::array();
            for (OrganId organ : OrganId::all()) {
                const auto& oa = o.accuracy->organs[organ.value - 1];
                organs.push_back({{"organ", organ.name()},
                                  {"dsc", oa.dsc},
                                  {"nsd", oa.nsd},
                                  {"gt_volume_cm3", oa.gt_volume_cm3},
                                  {"pred_volume_cm3", oa.pred_volume_cm3}});
            }
        }
        arr.push_back(std::move(c));
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << j.dump(2) << "\n";
}

EvaluationRun EvaluationRun::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read: " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    EvaluationRun run;
    run.run_id = j.at("run_id").get<std::string>();
    run.algorithm_name = j.at("algorithm").get<std::string>();
    run.command = j.at("command").get<std::vector<std::string>>();
    for (const auto& c : j.at("cases")) {
        CaseOutcome o;
        o.case_id = c.at("case_id").get<std::string>();
        o.status = run_status_from_string(c.at("status").get<std::string>());
        o.time_s = c.at("time_s").get<double>();
        o.auc_gpu = c.at("auc_gpu").get<double>();
        o.auc_cpu = c.at("auc_cpu").get<double>();
        if (c.contains("note")) o.note = c.at("note").get<std::string>();
        if (c.contains("organs")) {
            CaseAccuracy acc;
            for (const auto& org : c.at("organs")) {
                OrganId organ = OrganId::from_name(org.at("organ").get<std::string>());
                auto& oa = acc.organs[organ.value - 1];
                oa.dsc = org.at("dsc").get<double>();
                oa.nsd = org.at("nsd").get<double>();
                oa.gt_volume_cm3 = org.at("gt_volume_cm3").get<double>();
                oa.pred_volume_cm3 = org.at("pred_volume_cm3").get<double>();
            }
            o.accuracy = acc;
        }
        run.outcomes.push_back(std::move(o));
    }
    return run;
}

void EvaluationRun::save_case_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "case_id,status,mean_dsc,mean_nsd,time_s,auc_gpu,auc_cpu\n";
    out.precision(17);
    for (const auto& o : outcomes) {
        MetricTuple t = o.metric_tuple();
        out << o.case_id << "," << to_string(o.status);
        for (double v : t) out << "," << v;
        out << "\n";
    }
}

EvaluationRun cmd_evaluate(const CaseManifest& manifest, const std::string& algorithm_name,
                           const std::vector<std::string>& command, const ToleranceTable& tol,
                           const std::string& out_dir, const EvaluateOptions& opts) {
    if (command.empty()) throw LaunchError("algorithm command is empty");
    std::unique_ptr<ResourceProvider> owned;
    ResourceProvider* sampler = opts.sampler;
    if (!sampler) {
        owned = make_sampler_from_env();
        sampler = owned.get();
    }

    EvaluationRun run;
    run.run_id = algorithm_name;
    run.algorithm_name = algorithm_name;
    run.command = command;

    fs::path algo_dir = fs::path(out_dir) / algorithm_name;
    for (const auto& entry : manifest.cases) {
        fs::path case_dir = algo_dir / entry.case_id;
        fs::create_directories(case_dir);
        std::string pred_path = (case_dir / (entry.case_id + ".nii.gz")).string();

        CaseOutcome o;
        o.case_id = entry.case_id;
        RunResult rr =
            run_and_profile(command, entry.image_path, case_dir.string(), opts.timeout_s,
                            *sampler, pred_path);
        rr.trace.save_csv((case_dir / "trace.csv").string());
        o.status = rr.status;
        o.time_s = rr.time_s;
        o.auc_gpu = rr.auc_gpu;
        o.auc_cpu = rr.auc_cpu;

        if (rr.status == RunStatus::completed) {
            // A bad prediction file penalizes this case but never aborts the run.
            try {
                LabelVolume gt = to_canonical_ras(load_volume(entry.gt_label_path));
                LabelVolume pred = to_canonical_ras(load_volume(pred_path));
                o.accuracy = evaluate_case(gt, pred, tol);
            } catch (const DataError& e) {
                o.status = RunStatus::failed;
                o.note = e.what();
                o.accuracy.reset();
            }
        }
        run.outcomes.push_back(std::move(o));
    }

    fs::create_directories(algo_dir);
    run.save_json((algo_dir / "run.json").string());
    run.save_case_csv((algo_dir / "cases.csv").string());
    return run;
}

RankOutput cmd_rank(const std::vector<EvaluationRun>& runs, int n_boot, std::uint64_t seed) {
    if (runs.empty()) throw DataError("no evaluation runs supplied");
    const auto& ref = runs.front();
    std::vector<std::string> case_ids;
    for (const auto& o : ref.outcomes) case_ids.push_back(o.case_id);
    for (const auto& run : runs) {
        std::vector<std::string> ids;
        for (const auto& o : run.outcomes) ids.push_back(o.case_id);
        if (ids != case_ids) {
            std::string detail;
            for (const auto& id : ids) {
                if (std::find(case_ids.begin(), case_ids.end(), id) == case_ids.end()) {
                    detail += " +" + id;
                }
            }
            for (const auto& id : case_ids) {
                if (std::find(ids.begin(), ids.end(), id) == ids.end()) detail += " -" + id;
            }
            throw DataError("case-set mismatch between runs '" + ref.algorithm_name + "' and '" +
                            run.algorithm_name + "':" + detail);
        }
    }

    RankOutput out;
    out.matrix.cases = case_ids;
    for (const auto& run : runs) {
        out.matrix.algorithms.push_back(run.algorithm_name);
        std::vector<std::optional<MetricTuple>> row;
        for (const auto& o : run.outcomes) row.push_back(o.metric_tuple());
        out.matrix.values.push_back(std::move(row));
    }
    out.matrix = fill_penalties(out.matrix);
    out.leaderboard = rank_leaderboard(out.matrix);
    out.bootstrap = bootstrap_rankings(out.matrix, n_boot, seed);
    return out;
}

std::vector<SubgroupRow> cmd_subgroup(const EvaluationRun& run, const CaseManifest& manifest,
                                      const std::string& key) {
    if (!kMetadataKeys.count(key)) {
        throw ConfigError("unknown subgroup key: " + key +
                          " (expected sex, age_group, manufacturer, or region)");
    }
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& o : run.outcomes) {
        if (!o.accuracy.has_value()) continue;
        auto it = std::find_if(manifest.cases.begin(), manifest.cases.end(),
                               [&](const CaseEntry& e) { return e.case_id == o.case_id; });
        if (it == manifest.cases.end()) continue;
        auto md = it->metadata.find(key);
        if (md == it->metadata.end()) continue;
        groups[md->second].first.push_back(o.accuracy->mean_dsc());
        groups[md->second].second.push_back(o.accuracy->mean_nsd());
    }
    if (groups.empty()) {
        throw ConfigError("subgroup key '" + key + "' is absent from all evaluated cases");
    }
    std::vector<SubgroupRow> rows;
    for (auto& [name, vals] : groups) {
        SubgroupRow r;
        r.group = name;
        r.n_cases = vals.first.size();
        r.median_dsc = quantile(vals.first, 0.5);
        r.iqr_lo_dsc = quantile(vals.first, 0.25);
        r.iqr_hi_dsc = quantile(vals.first, 0.75);
        r.median_nsd = quantile(vals.second, 0.5);
        r.iqr_lo_nsd = quantile(vals.second, 0.25);
        r.iqr_hi_nsd = quantile(vals.second, 0.75);
        rows.push_back(r);
    }
    return rows;
}

void save_subgroup_csv(const std::vector<SubgroupRow>& rows, const std::string& key,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << key << ",n_cases,median_dsc,iqr_lo_dsc,iqr_hi_dsc,median_nsd,iqr_lo_nsd,iqr_hi_nsd\n";
    out.precision(10);
    for (const auto& r : rows) {
        out << r.group << "," << r.n_cases << "," << r.median_dsc << "," << r.iqr_lo_dsc << ","
            << r.iqr_hi_dsc << "," << r.median_nsd << "," << r.iqr_lo_nsd << "," << r.iqr_hi_nsd
            << "\n";
    }
}

std::vector<OrganVolumeReport> cmd_volumes(const EvaluationRun& run) {
    std::vector<OrganVolumeReport> reports;
    for (OrganId organ : OrganId::all()) {
        OrganVolumeReport rep;
        rep.organ = organ;
        for (const auto& o : run.outcomes) {
            if (!o.accuracy.has_value()) continue;
            const auto& oa = o.accuracy->organs[organ.value - 1];
            if (oa.gt_volume_cm3 <= 0) continue;  // absent organ
            rep.gt_cm3.push_back(oa.gt_volume_cm3);
            rep.pred_cm3.push_back(oa.pred_volume_cm3);
        }
        if (rep.gt_cm3.size() >= 2) {
            try {
                rep.pearson = pearson_r(rep.gt_cm3, rep.pred_cm3);
            } catch (const DataError&) {
                // degenerate variance: report the pairs without a coefficient
            }
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

void save_volume_csv(const std::vector<OrganVolumeReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "organ,gt_cm3,pred_cm3,pearson_r\n";
    out.precision(10);
    for (const auto& rep : reports) {
        for (std::size_t i = 0; i < rep.gt_cm3.size(); ++i) {
            out << rep.organ.name() << "," << rep.gt_cm3[i] << "," << rep.pred_cm3[i] << ",";
            if (rep.pearson.has_value()) out << *rep.pearson;
            out << "\n";
        }
    }
}

}  // namespace flare

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flare/harness.hpp"

namespace fs = std::filesystem;

namespace {

int run(int argc, char** argv) {
    CLI::App app{"FLARE-style benchmark harness for 3D abdominal organ segmentation"};
    app.require_subcommand(1);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Profile one algorithm over a case manifest");
    std::string manifest_path, tol_path, out_dir, algo_name;
    std::vector<std::string> command;
    double timeout_s = 3600.0;
    evaluate->add_option("--manifest", manifest_path, "Case manifest CSV")->required();
    evaluate->add_option("--tolerances", tol_path, "NSD tolerance config")->required();
    evaluate->add_option("--out", out_dir, "Output directory")->required();
    evaluate->add_option("--name", algo_name, "Algorithm name")->required();
    evaluate->add_option("--timeout", timeout_s, "Per-case timeout in seconds");
    evaluate
        ->add_option("command", command,
                     "Algorithm command; it is invoked with <case-input> <output-dir> appended "
                     "and must write <case-id>.nii.gz into the output directory")
        ->required();

    // rank
    auto* rank = app.add_subcommand("rank", "Build the leaderboard and bootstrap stability report");
    std::vector<std::string> run_paths;
    int n_boot = 1000;
    std::uint64_t seed = 20220822;
    rank->add_option("--out", out_dir, "Output directory")->required();
    rank->add_option("--n-boot", n_boot, "Bootstrap iterations");
    rank->add_option("--seed", seed, "Bootstrap RNG seed");
    rank->add_option("runs", run_paths, "run.json files, one per algorithm")->required();

    // subgroup
    auto* subgroup = app.add_subcommand("subgroup", "Summarize accuracy by case metadata group");
    std::string run_path, key;
    subgroup->add_option("--run", run_path, "run.json of the evaluated algorithm")->required();
    subgroup->add_option("--manifest", manifest_path, "Case manifest CSV")->required();
    subgroup->add_option("--key", key, "Grouping key: sex, age_group, manufacturer, region")
        ->required();
    subgroup->add_option("--out", out_dir, "Output directory")->required();

    // volumes
    auto* volumes = app.add_subcommand("volumes", "Organ volume agreement report");
    volumes->add_option("--run", run_path, "run.json of the evaluated algorithm")->required();
    volumes->add_option("--out", out_dir, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (*evaluate) {
        auto manifest = flare::CaseManifest::load(manifest_path);
        auto tol = flare::ToleranceTable::load(tol_path);
        fs::create_directories(out_dir);
        auto run = flare::cmd_evaluate(manifest, algo_name, command, tol, out_dir,
                                       {.timeout_s = timeout_s});
        std::size_t completed = 0;
        for (const auto& o : run.outcomes) completed += o.status == flare::RunStatus::completed;
        std::cout << "evaluated " << run.outcomes.size() << " cases (" << completed
                  << " completed); artifacts under " << (fs::path(out_dir) / algo_name).string()
                  << "\n";
    } else if (*rank) {
        std::vector<flare::EvaluationRun> runs;
        for (const auto& p : run_paths) runs.push_back(flare::EvaluationRun::load_json(p));
        auto out = flare::cmd_rank(runs, n_boot, seed);
        fs::create_directories(out_dir);
        out.matrix.save_csv((fs::path(out_dir) / "metrics.csv").string());
        out.leaderboard.save_csv((fs::path(out_dir) / "leaderboard.csv").string());
        out.leaderboard.save_json((fs::path(out_dir) / "leaderboard.json").string());
        out.bootstrap.save_json((fs::path(out_dir) / "stability.json").string());
        out.bootstrap.save_rank_histogram_csv((fs::path(out_dir) / "rank_histogram.csv").string());
        for (const auto& e : out.leaderboard.entries) {
            std::cout << e.final_rank << "\t" << e.algorithm << "\t" << e.aggregate_score << "\n";
        }
    } else if (*subgroup) {
        auto run = flare::EvaluationRun::load_json(run_path);
        auto manifest = flare::CaseManifest::load(manifest_path);
        auto rows = flare::cmd_subgroup(run, manifest, key);
        fs::create_directories(out_dir);
        std::string out_path = (fs::path(out_dir) / ("subgroup_" + key + ".csv")).string();
        flare::save_subgroup_csv(rows, key, out_path);
        std::cout << "wrote " << rows.size() << " groups to " << out_path << "\n";
    } else if (*volumes) {
        auto run = flare::EvaluationRun::load_json(run_path);
        auto reports = flare::cmd_volumes(run);
        fs::create_directories(out_dir);
        std::string out_path = (fs::path(out_dir) / "volumes.csv").string();
        flare::save_volume_csv(reports, out_path);
        for (const auto& rep : reports) {
            std::cout << rep.organ.name() << ": n=" << rep.gt_cm3.size() << " r=";
            if (rep.pearson.has_value()) {
                std::cout << *rep.pearson;
            } else {
                std::cout << "n/a";
            }
            std::cout << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const flare::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const flare::LaunchError& e) {
        std::cerr << "launch error: " << e.what() << "\n";
        return 4;
    } catch (const flare::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

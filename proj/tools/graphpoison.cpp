// Command-line front end: dataset statistics, recommendations, attacks,
// evaluation, detection and experiment sweeps.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graphpoison/detection.hpp"
#include "graphpoison/errors.hpp"
#include "graphpoison/experiment.hpp"
#include "graphpoison/recommend.hpp"
#include "graphpoison/rng.hpp"

using namespace graphpoison;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct DatasetFlags {
    std::string path;
    std::string format = "movielens";
    char delimiter = ',';
    bool no_header = false;
    std::string user_column = "user", item_column = "item", rating_column = "rating";

    void attach(CLI::App* cmd) {
        cmd->add_option("--data", path, "Rating file")->required();
        cmd->add_option("--format", format, "movielens, csv or snapshot")->capture_default_str();
        cmd->add_option("--delimiter", delimiter, "CSV field delimiter");
        cmd->add_flag("--no-header", no_header, "CSV file has no header row (columns 0, 1, 2)");
        cmd->add_option("--user-column", user_column, "CSV user column name");
        cmd->add_option("--item-column", item_column, "CSV item column name");
        cmd->add_option("--rating-column", rating_column, "CSV rating column name");
    }

    DatasetSource source() const {
        DatasetSource s;
        s.path = path;
        s.format = parse_format(format);
        s.csv.delimiter = delimiter;
        s.csv.has_header = !no_header;
        s.csv.user_column = user_column;
        s.csv.item_column = item_column;
        s.csv.rating_column = rating_column;
        if (no_header) {
            s.csv.user_index = 0;
            s.csv.item_index = 1;
            s.csv.rating_index = 2;
        }
        return s;
    }
};

ItemId item_by_label(const RatingMatrix& m, const std::string& label) {
    const auto& labels = m.item_labels();
    for (ItemId i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return i;
    throw ValidationError("no item labelled '" + label + "' in the dataset");
}

UserId user_by_label(const RatingMatrix& m, const std::string& label) {
    const auto& labels = m.user_labels();
    for (UserId u = 0; u < labels.size(); ++u)
        if (labels[u] == label) return u;
    throw ValidationError("no user labelled '" + label + "' in the dataset");
}

AttackConfig attack_config(const std::string& config_path) {
    return config_path.empty() ? AttackConfig{} : load_attack_config(config_path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random-walk recommender poisoning toolkit"};
    app.require_subcommand(1);

    // load-stats
    auto* stats_cmd = app.add_subcommand("load-stats", "Load a dataset and print its size and sparsity");
    DatasetFlags stats_data;
    stats_data.attach(stats_cmd);
    std::string snapshot_out;
    stats_cmd->add_option("--snapshot", snapshot_out, "Also write the loaded matrix as a snapshot");

    // recommend
    auto* rec_cmd = app.add_subcommand("recommend", "Top-N list of one user");
    DatasetFlags rec_data;
    rec_data.attach(rec_cmd);
    std::string rec_user;
    std::size_t rec_n = 10;
    double rec_alpha = 0.3;
    rec_cmd->add_option("--user", rec_user, "User label from the dataset")->required();
    rec_cmd->add_option("-N,--top", rec_n, "List length")->capture_default_str();
    rec_cmd->add_option("--alpha", rec_alpha, "Restart probability")->capture_default_str();

    // attack
    auto* atk_cmd = app.add_subcommand("attack", "Generate fake-user profiles promoting one item");
    DatasetFlags atk_data;
    atk_data.attach(atk_cmd);
    std::string atk_kind = "optimized", atk_target, atk_out, atk_config, atk_matrix_out;
    double atk_size = 0.03;
    std::optional<std::size_t> atk_count;
    std::uint64_t atk_seed = 0;
    std::optional<std::size_t> atk_fillers;
    atk_cmd->add_option("--attack", atk_kind, "random, average, bandwagon, covisitation or optimized")
        ->capture_default_str();
    atk_cmd->add_option("--target", atk_target, "Target item label")->required();
    atk_cmd->add_option("--size", atk_size, "Fake users as a fraction of normal users")->capture_default_str();
    atk_cmd->add_option("--count", atk_count, "Number of fake users (overrides --size)");
    atk_cmd->add_option("-n,--fillers", atk_fillers, "Filler items per fake user");
    atk_cmd->add_option("--seed", atk_seed, "Random seed")->capture_default_str();
    atk_cmd->add_option("--config", atk_config, "JSON attack configuration");
    atk_cmd->add_option("--out", atk_out, "Profile file to write")->required();
    atk_cmd->add_option("--matrix-out", atk_matrix_out, "Also write the poisoned matrix as a snapshot");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Hit ratio of target items, optionally after injecting profiles");
    DatasetFlags eval_data;
    eval_data.attach(eval_cmd);
    std::vector<std::string> eval_targets;
    std::vector<std::size_t> eval_n{10};
    std::string eval_profiles;
    double eval_alpha = 0.3;
    bool eval_mf = false;
    std::uint64_t eval_seed = 0;
    eval_cmd->add_option("--target", eval_targets, "Target item labels")->required();
    eval_cmd->add_option("-N,--top", eval_n, "List lengths")->capture_default_str();
    eval_cmd->add_option("--profiles", eval_profiles, "Fake-user profile file to inject first");
    eval_cmd->add_option("--alpha", eval_alpha, "Restart probability")->capture_default_str();
    eval_cmd->add_flag("--mf", eval_mf, "Also rank with matrix factorization");
    eval_cmd->add_option("--seed", eval_seed, "Seed for matrix factorization")->capture_default_str();

    // detect
    auto* det_cmd = app.add_subcommand("detect", "Train the rating-feature detector and screen a poisoned matrix");
    DatasetFlags det_data;
    det_data.attach(det_cmd);
    std::string det_profiles, det_training = "optimized", det_target, det_report, det_config;
    std::size_t det_normals = 150, det_fakes = 150;
    std::vector<std::size_t> det_n{10};
    std::uint64_t det_seed = 0;
    det_cmd->add_option("--profiles", det_profiles, "Injected fake-user profiles to screen")->required();
    det_cmd->add_option("--training-attack", det_training, "Attack used to make training fakes")
        ->capture_default_str();
    det_cmd->add_option("--training-target", det_target, "Target label of the training fakes")->required();
    det_cmd->add_option("--training-normals", det_normals, "Normal users sampled for training")
        ->capture_default_str();
    det_cmd->add_option("--training-fakes", det_fakes, "Training fakes generated")->capture_default_str();
    det_cmd->add_option("-N,--top", det_n, "List lengths for the filtered hit ratio")->capture_default_str();
    det_cmd->add_option("--seed", det_seed, "Random seed")->capture_default_str();
    det_cmd->add_option("--config", det_config, "JSON attack configuration for training fakes");
    det_cmd->add_option("--report", det_report, "Per-user predictions (.csv or .json)");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Run an experiment grid and write a result table");
    std::string sweep_config, sweep_out, sweep_format;
    std::uint64_t sweep_seed = 0;
    std::optional<std::string> sweep_data;
    std::vector<std::string> sweep_attacks;
    std::vector<double> sweep_sizes;
    std::optional<std::string> sweep_mode;
    std::optional<std::size_t> sweep_targets, sweep_jobs;
    bool sweep_detector = false, sweep_black_box = false, sweep_quiet = false;
    sweep_cmd->add_option("--config", sweep_config, "JSON experiment specification");
    sweep_cmd->add_option("--seed", sweep_seed, "Top-level seed")->required();
    sweep_cmd->add_option("--data", sweep_data, "MovieLens rating file (overrides the config)");
    sweep_cmd->add_option("--attacks", sweep_attacks, "Attacks to run");
    sweep_cmd->add_option("--sizes", sweep_sizes, "Attack sizes as fractions");
    sweep_cmd->add_option("--target-mode", sweep_mode, "random or unpopular");
    sweep_cmd->add_option("--targets", sweep_targets, "Number of target items");
    sweep_cmd->add_option("--jobs", sweep_jobs, "Cells run concurrently");
    sweep_cmd->add_flag("--detector", sweep_detector, "Train and apply the detector");
    sweep_cmd->add_flag("--black-box", sweep_black_box, "Also evaluate matrix factorization");
    sweep_cmd->add_flag("--quiet", sweep_quiet, "No per-cell progress on stderr");
    sweep_cmd->add_option("--out", sweep_out, "Result file")->required();
    sweep_cmd->add_option("--output-format", sweep_format, "csv or json (default: from the extension)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*stats_cmd) {
            const auto m = load_dataset(stats_data.source());
            const auto s = stats(m);
            std::printf("users %zu\nitems %zu\nratings %zu\nr_max %d\nsparsity %.2f%%\n", s.num_users, s.num_items,
                        s.num_ratings, m.r_max(), 100.0 * s.sparsity);
            if (!snapshot_out.empty()) save_snapshot(m, snapshot_out);
        } else if (*rec_cmd) {
            const auto m = load_dataset(rec_data.source());
            const auto u = user_by_label(m, rec_user);
            const auto q = build_transition(m);
            const auto p = solve_rwr(q, q.user_node(u), rec_alpha);
            if (!p.converged) throw NumericalError("random walk did not converge");
            const auto list = top_n(m, p, rec_n);
            for (std::size_t k = 0; k < list.items.size(); ++k)
                std::printf("%zu\t%s\t%.6e\n", k + 1, m.item_label(list.items[k]).c_str(), list.scores[k]);
        } else if (*atk_cmd) {
            const auto m = load_dataset(atk_data.source());
            auto cfg = attack_config(atk_config);
            if (atk_fillers) cfg.num_fillers = *atk_fillers;
            const auto t = item_by_label(m, atk_target);
            const auto count = atk_count ? *atk_count : fake_user_count(m, atk_size);
            const auto profiles = generate_profiles(m, parse_attack(atk_kind), t, count, cfg, atk_seed);
            save_profiles(profiles, m.r_max(), atk_out);
            if (!atk_matrix_out.empty()) save_snapshot(append_fake_users(m, profiles), atk_matrix_out);
            std::fprintf(stderr, "wrote %zu profiles to %s\n", profiles.size(), atk_out.c_str());
        } else if (*eval_cmd) {
            auto m = load_dataset(eval_data.source());
            std::vector<ItemId> targets;
            for (const auto& label : eval_targets) targets.push_back(item_by_label(m, label));
            if (!eval_profiles.empty()) m = append_fake_users(m, load_profiles(eval_profiles));
            HitRatioOptions opts;
            opts.alpha = eval_alpha;
            const auto grid = hit_ratios(m, targets, eval_n, opts);
            std::optional<HitRatioGrid> mf_grid;
            if (eval_mf) {
                MfOptions mf;
                mf.seed = eval_seed;
                mf_grid = mf_hit_ratios(mf_train(m, mf), m, targets, eval_n);
            }
            std::printf("target\tN\thit_ratio%s\n", eval_mf ? "\tmf_hit_ratio" : "");
            for (std::size_t k = 0; k < targets.size(); ++k)
                for (std::size_t j = 0; j < eval_n.size(); ++j) {
                    std::printf("%s\t%zu\t%.4f", m.item_label(targets[k]).c_str(), eval_n[j], grid.at(k, j));
                    if (mf_grid) std::printf("\t%.4f", mf_grid->at(k, j));
                    std::printf("\n");
                }
        } else if (*det_cmd) {
            const auto m = load_dataset(det_data.source());
            const auto cfg = attack_config(det_config);
            const auto train_t = item_by_label(m, det_target);
            const auto fakes = generate_profiles(m, parse_attack(det_training), train_t, det_fakes, cfg,
                                                 derive_seed(det_seed, {hash_name("detector-fakes")}));
            DetectorOptions opts;
            opts.seed = det_seed;
            const auto model = train_detector(m, fakes, det_normals, opts);
            for (const auto& w : model.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
            const auto injected = load_profiles(det_profiles);
            const auto attacked = append_fake_users(m, injected);
            const auto report = detect(model, attacked);
            std::printf("K %zu (cross-validated accuracy %.4f)\n", model.k, model.cv_accuracy);
            std::printf("fpr %s\nfnr %s\n", report.fpr ? std::to_string(*report.fpr).c_str() : "n/a",
                        report.fnr ? std::to_string(*report.fnr).c_str() : "n/a");
            std::vector<ItemId> targets;
            for (const auto& p : injected)
                if (std::find(targets.begin(), targets.end(), p.target) == targets.end()) targets.push_back(p.target);
            if (!targets.empty()) {
                HitRatioOptions hr;
                hr.alpha = cfg.alpha;
                const auto before = hit_ratios(attacked, targets, det_n, hr);
                const auto after = filtered_hit_ratios(attacked, report, targets, det_n, hr);
                std::printf("target\tN\thit_ratio\tfiltered_hit_ratio\n");
                for (std::size_t k = 0; k < targets.size(); ++k)
                    for (std::size_t j = 0; j < det_n.size(); ++j)
                        std::printf("%s\t%zu\t%.4f\t%.4f\n", m.item_label(targets[k]).c_str(), det_n[j],
                                    before.at(k, j), after.at(k, j));
            }
            if (!det_report.empty()) save_detection_report(report, attacked, det_report);
        } else if (*sweep_cmd) {
            ExperimentSpec spec;
            if (!sweep_config.empty()) {
                std::ifstream in(sweep_config);
                if (!in) throw IoError("cannot read " + sweep_config);
                nlohmann::json j;
                try {
                    in >> j;
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(sweep_config + ": " + e.what());
                }
                spec = experiment_spec_from_json(j);
            }
            spec.seed = sweep_seed;
            if (sweep_data) {
                spec.dataset.path = *sweep_data;
                spec.dataset.format = DatasetFormat::movielens;
            }
            if (spec.dataset.path.empty()) throw ConfigError("no dataset: pass --data or set dataset.path");
            if (!sweep_attacks.empty()) {
                spec.attacks.clear();
                for (const auto& a : sweep_attacks) spec.attacks.push_back(parse_attack(a));
            }
            if (!sweep_sizes.empty()) spec.attack_sizes = sweep_sizes;
            if (sweep_mode) spec.target_mode = parse_target_mode(*sweep_mode);
            if (sweep_targets) spec.num_targets = *sweep_targets;
            if (sweep_jobs) spec.jobs = *sweep_jobs;
            if (sweep_detector) spec.detector.enabled = true;
            if (sweep_black_box) spec.black_box = true;
            CellProgress progress;
            if (!sweep_quiet)
                progress = [](AttackKind a, double size, ItemId t, bool ok) {
                    std::fprintf(stderr, "%-12s size %.4f target %u %s\n", std::string(to_string(a)).c_str(), size,
                                 t, ok ? "done" : "FAILED");
                };
            const auto table = run_experiment(spec, progress);
            std::string fmt = sweep_format;
            if (fmt.empty()) fmt = std::filesystem::path(sweep_out).extension() == ".json" ? "json" : "csv";
            if (fmt != "csv" && fmt != "json") throw ConfigError("output format must be csv or json");
            emit(table, fmt == "csv" ? TableFormat::csv : TableFormat::json, sweep_out);
            std::fputs(to_csv(table).c_str(), stdout);
            for (const auto& f : table.failures)
                std::fprintf(stderr, "failed: %s size %.4f target %u: %s\n", std::string(to_string(f.attack)).c_str(),
                             f.attack_size, f.target, f.message.c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const IoError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kData;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kNumerical;
    }
    return kOk;
}

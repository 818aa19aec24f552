#include "graphpoison/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "graphpoison/baselines.hpp"
#include "graphpoison/detection.hpp"
#include "graphpoison/errors.hpp"
#include "graphpoison/parallel.hpp"
#include "graphpoison/rng.hpp"

namespace graphpoison {

using nlohmann::json;

namespace {

constexpr std::pair<AttackKind, std::string_view> kAttackNames[] = {
    {AttackKind::none, "none"},           {AttackKind::random, "random"},
    {AttackKind::average, "average"},     {AttackKind::bandwagon, "bandwagon"},
    {AttackKind::covisitation, "covisitation"}, {AttackKind::optimized, "optimized"},
};

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
    for (const auto& [key, value] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + std::string(where));
}

json solver_json(const SolverOptions& s) {
    return {{"tol", s.tol}, {"max_iter", s.max_iter}};
}

SolverOptions solver_from(const json& j, SolverOptions s, std::string_view where) {
    check_keys(j, {"tol", "max_iter"}, where);
    s.tol = get_or(j, "tol", s.tol);
    s.max_iter = get_or(j, "max_iter", s.max_iter);
    return s;
}

std::uint64_t size_key(double size) {
    return static_cast<std::uint64_t>(std::llround(size * 1e6));
}

std::string fixed4(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

std::string fixed4(const std::optional<double>& x) {
    return x ? fixed4(*x) : std::string();
}

json optional_json(const std::optional<double>& x) {
    return x ? json(*x) : json(nullptr);
}

std::optional<double> optional_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

std::string_view to_string(AttackKind a) {
    for (const auto& [k, name] : kAttackNames)
        if (k == a) return name;
    return "unknown";
}

std::string_view to_string(TargetMode t) {
    return t == TargetMode::random ? "random" : "unpopular";
}

std::string_view to_string(DatasetFormat f) {
    switch (f) {
        case DatasetFormat::movielens: return "movielens";
        case DatasetFormat::csv: return "csv";
        case DatasetFormat::snapshot: return "snapshot";
    }
    return "unknown";
}

AttackKind parse_attack(std::string_view name) {
    for (const auto& [k, n] : kAttackNames)
        if (n == name) return k;
    throw ConfigError("unknown attack '" + std::string(name) + "'");
}

TargetMode parse_target_mode(std::string_view name) {
    if (name == "random") return TargetMode::random;
    if (name == "unpopular") return TargetMode::unpopular;
    throw ConfigError("unknown target mode '" + std::string(name) + "'");
}

DatasetFormat parse_format(std::string_view name) {
    if (name == "movielens") return DatasetFormat::movielens;
    if (name == "csv") return DatasetFormat::csv;
    if (name == "snapshot") return DatasetFormat::snapshot;
    throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

std::vector<ItemId> select_targets(const RatingMatrix& m, TargetMode mode, std::size_t count, std::uint64_t seed) {
    std::vector<ItemId> pool;
    for (ItemId i = 0; i < m.num_items(); ++i)
        if (mode == TargetMode::random || m.item_ratings(i).size() <= kUnpopularMaxRatings) pool.push_back(i);
    if (pool.size() < count)
        throw ValidationError("cannot pick " + std::to_string(count) + " " + std::string(to_string(mode)) +
                              " targets: the pool holds " + std::to_string(pool.size()) + " items");
    Rng rng(seed);
    return sample_without_replacement(rng, std::move(pool), count);
}

std::vector<FakeUserProfile> generate_profiles(const RatingMatrix& m, AttackKind attack, ItemId t, std::size_t count,
                                               const AttackConfig& cfg, std::uint64_t seed) {
    const auto n = cfg.num_fillers;
    switch (attack) {
        case AttackKind::none: return {};
        case AttackKind::random: return random_attack(m, t, count, n, seed);
        case AttackKind::average: return average_attack(m, t, count, n, seed);
        case AttackKind::bandwagon: return bandwagon_attack(m, t, count, n, seed);
        case AttackKind::covisitation: return covisitation_attack(m, t, count, n, seed);
        case AttackKind::optimized: {
            AttackConfig c = cfg;
            c.target = t;
            c.num_fake = count;
            c.seed = seed;
            c.r_max = m.r_max();
            return run_attack(m, c);
        }
    }
    throw std::logic_error("unhandled attack kind");
}

RatingMatrix load_dataset(const DatasetSource& source) {
    switch (source.format) {
        case DatasetFormat::movielens: return load_movielens(source.path);
        case DatasetFormat::csv: return load_csv(source.path, source.csv);
        case DatasetFormat::snapshot: return load_snapshot(source.path);
    }
    throw std::logic_error("unhandled dataset format");
}

json to_json(const AttackConfig& c) {
    return {
        {"target", c.target},
        {"num_fake", c.num_fake},
        {"n", c.num_fillers},
        {"lambda", c.lambda},
        {"b", c.width},
        {"alpha", c.alpha},
        {"r_max", c.r_max},
        {"N", c.top_n},
        {"seed", c.seed},
        {"pgd",
         {{"step", c.pgd.step},
          {"max_iter", c.pgd.max_iter},
          {"stop_tol", c.pgd.stop_tol},
          {"max_halvings", c.pgd.max_halvings}}},
        {"walk", solver_json(c.walk)},
        {"jacobian", solver_json(c.jacobian)},
        {"s_cap", c.sample_cap ? json(*c.sample_cap) : json(nullptr)},
        {"edge_cutoff", c.edge_cutoff},
        {"active_set_factor", c.active_set_factor},
        {"list_refresh_every", c.list_refresh_every},
        {"threads", c.threads},
    };
}

AttackConfig attack_config_from_json(const json& j, AttackConfig c) {
    check_keys(j,
               {"target", "num_fake", "n", "lambda", "b", "alpha", "r_max", "N", "seed", "pgd", "walk", "jacobian",
                "s_cap", "edge_cutoff", "active_set_factor", "list_refresh_every", "threads"},
               "attack config");
    try {
        c.target = get_or(j, "target", c.target);
        c.num_fake = get_or(j, "num_fake", c.num_fake);
        c.num_fillers = get_or(j, "n", c.num_fillers);
        c.lambda = get_or(j, "lambda", c.lambda);
        c.width = get_or(j, "b", c.width);
        c.alpha = get_or(j, "alpha", c.alpha);
        c.r_max = get_or(j, "r_max", c.r_max);
        c.top_n = get_or(j, "N", c.top_n);
        c.seed = get_or(j, "seed", c.seed);
        if (j.contains("pgd")) {
            const auto& p = j.at("pgd");
            check_keys(p, {"step", "max_iter", "stop_tol", "max_halvings"}, "pgd");
            c.pgd.step = get_or(p, "step", c.pgd.step);
            c.pgd.max_iter = get_or(p, "max_iter", c.pgd.max_iter);
            c.pgd.stop_tol = get_or(p, "stop_tol", c.pgd.stop_tol);
            c.pgd.max_halvings = get_or(p, "max_halvings", c.pgd.max_halvings);
        }
        if (j.contains("walk")) c.walk = solver_from(j.at("walk"), c.walk, "walk");
        if (j.contains("jacobian")) c.jacobian = solver_from(j.at("jacobian"), c.jacobian, "jacobian");
        if (j.contains("s_cap"))
            c.sample_cap = j.at("s_cap").is_null() ? std::nullopt : std::optional(j.at("s_cap").get<std::size_t>());
        c.edge_cutoff = get_or(j, "edge_cutoff", c.edge_cutoff);
        c.active_set_factor = get_or(j, "active_set_factor", c.active_set_factor);
        c.list_refresh_every = get_or(j, "list_refresh_every", c.list_refresh_every);
        c.threads = get_or(j, "threads", c.threads);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("attack config: ") + e.what());
    }
    return c;
}

AttackConfig load_attack_config(const std::filesystem::path& path, AttackConfig base) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return attack_config_from_json(j, std::move(base));
}

json to_json(const ExperimentSpec& s) {
    json attacks = json::array();
    for (auto a : s.attacks) attacks.push_back(to_string(a));
    const auto& csv = s.dataset.csv;
    json schema = {{"delimiter", std::string(1, csv.delimiter)},
                   {"has_header", csv.has_header},
                   {"user_column", csv.user_column},
                   {"item_column", csv.item_column},
                   {"rating_column", csv.rating_column}};
    if (csv.user_index) schema["user_index"] = *csv.user_index;
    if (csv.item_index) schema["item_index"] = *csv.item_index;
    if (csv.rating_index) schema["rating_index"] = *csv.rating_index;
    return {
        {"dataset", {{"path", s.dataset.path.string()}, {"format", to_string(s.dataset.format)}, {"csv", schema}}},
        {"attacks", attacks},
        {"target_mode", to_string(s.target_mode)},
        {"num_targets", s.num_targets},
        {"attack_sizes", s.attack_sizes},
        {"N", s.list_lengths},
        {"attack", to_json(s.attack)},
        {"black_box", s.black_box},
        {"mf",
         {{"dims", s.mf.dims},
          {"epochs", s.mf.epochs},
          {"learning_rate", s.mf.learning_rate},
          {"regularization", s.mf.regularization},
          {"init_scale", s.mf.init_scale}}},
        {"detector",
         {{"enabled", s.detector.enabled},
          {"normal_count", s.detector.normal_count},
          {"fake_count", s.detector.fake_count},
          {"training_s_cap", s.detector.training_sample_cap ? json(*s.detector.training_sample_cap) : json(nullptr)},
          {"training_max_iter",
           s.detector.training_max_iter ? json(*s.detector.training_max_iter) : json(nullptr)}}},
        {"seed", s.seed},
        {"jobs", s.jobs},
    };
}

ExperimentSpec experiment_spec_from_json(const json& j, ExperimentSpec s) {
    check_keys(j,
               {"dataset", "attacks", "target_mode", "num_targets", "attack_sizes", "N", "attack", "black_box", "mf",
                "detector", "seed", "jobs"},
               "experiment config");
    try {
        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            check_keys(d, {"path", "format", "csv"}, "dataset");
            if (d.contains("path")) s.dataset.path = d.at("path").get<std::string>();
            if (d.contains("format")) s.dataset.format = parse_format(d.at("format").get<std::string>());
            if (d.contains("csv")) {
                const auto& c = d.at("csv");
                check_keys(c,
                           {"delimiter", "has_header", "user_column", "item_column", "rating_column", "user_index",
                            "item_index", "rating_index"},
                           "csv");
                auto& csv = s.dataset.csv;
                if (c.contains("delimiter")) {
                    const auto delim = c.at("delimiter").get<std::string>();
                    if (delim.size() != 1) throw ConfigError("csv delimiter must be one character");
                    csv.delimiter = delim[0];
                }
                csv.has_header = get_or(c, "has_header", csv.has_header);
                csv.user_column = get_or(c, "user_column", csv.user_column);
                csv.item_column = get_or(c, "item_column", csv.item_column);
                csv.rating_column = get_or(c, "rating_column", csv.rating_column);
                if (c.contains("user_index")) csv.user_index = c.at("user_index").get<std::size_t>();
                if (c.contains("item_index")) csv.item_index = c.at("item_index").get<std::size_t>();
                if (c.contains("rating_index")) csv.rating_index = c.at("rating_index").get<std::size_t>();
            }
        }
        if (j.contains("attacks")) {
            s.attacks.clear();
            for (const auto& a : j.at("attacks")) s.attacks.push_back(parse_attack(a.get<std::string>()));
        }
        if (j.contains("target_mode")) s.target_mode = parse_target_mode(j.at("target_mode").get<std::string>());
        s.num_targets = get_or(j, "num_targets", s.num_targets);
        s.attack_sizes = get_or(j, "attack_sizes", s.attack_sizes);
        s.list_lengths = get_or(j, "N", s.list_lengths);
        if (j.contains("attack")) s.attack = attack_config_from_json(j.at("attack"), s.attack);
        s.black_box = get_or(j, "black_box", s.black_box);
        if (j.contains("mf")) {
            const auto& m = j.at("mf");
            check_keys(m, {"dims", "epochs", "learning_rate", "regularization", "init_scale"}, "mf");
            s.mf.dims = get_or(m, "dims", s.mf.dims);
            s.mf.epochs = get_or(m, "epochs", s.mf.epochs);
            s.mf.learning_rate = get_or(m, "learning_rate", s.mf.learning_rate);
            s.mf.regularization = get_or(m, "regularization", s.mf.regularization);
            s.mf.init_scale = get_or(m, "init_scale", s.mf.init_scale);
        }
        if (j.contains("detector")) {
            const auto& d = j.at("detector");
            check_keys(d, {"enabled", "normal_count", "fake_count", "training_s_cap", "training_max_iter"},
                       "detector");
            auto& det = s.detector;
            det.enabled = get_or(d, "enabled", det.enabled);
            det.normal_count = get_or(d, "normal_count", det.normal_count);
            det.fake_count = get_or(d, "fake_count", det.fake_count);
            auto opt_count = [&](const char* key, std::optional<std::size_t>& out) {
                if (!d.contains(key)) return;
                out = d.at(key).is_null() ? std::nullopt : std::optional(d.at(key).get<std::size_t>());
            };
            opt_count("training_s_cap", det.training_sample_cap);
            opt_count("training_max_iter", det.training_max_iter);
        }
        s.seed = get_or(j, "seed", s.seed);
        s.jobs = get_or(j, "jobs", s.jobs);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    }
    return s;
}

std::string config_hash(const ExperimentSpec& spec) {
    auto j = to_json(spec);
    // execution knobs that cannot change any number
    j.erase("jobs");
    j["attack"].erase("threads");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_name(j.dump())));
    return buf;
}

ResultTable run_experiment(const ExperimentSpec& spec, const CellProgress& progress) {
    return run_experiment(spec, load_dataset(spec.dataset), progress);
}

ResultTable run_experiment(const ExperimentSpec& spec, const RatingMatrix& m, const CellProgress& progress) {
    const auto started = std::chrono::steady_clock::now();
    if (spec.attacks.empty() || spec.attack_sizes.empty() || spec.list_lengths.empty())
        throw ConfigError("experiment needs at least one attack, attack size and N");
    for (double s : spec.attack_sizes)
        if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("attack sizes must lie in [0, 1]");
    for (auto n : spec.list_lengths)
        if (n == 0) throw ConfigError("N must be >= 1");
    AttackConfig base = spec.attack;
    base.r_max = m.r_max();

    ResultTable table;
    table.seed = spec.seed;
    table.config_hash = config_hash(spec);
    table.targets = select_targets(m, spec.target_mode, spec.num_targets, derive_seed(spec.seed, {hash_name("targets")}));

    HitRatioOptions hr_opts;
    hr_opts.alpha = base.alpha;
    hr_opts.solver = base.walk;
    hr_opts.threads = base.threads;

    // one detector per attack, trained on the clean matrix with its own fakes
    std::map<AttackKind, DetectorModel> detectors;
    if (spec.detector.enabled) {
        for (auto a : spec.attacks) {
            if (a == AttackKind::none || detectors.contains(a)) continue;
            const auto key = hash_name(to_string(a));
            const auto train_target =
                select_targets(m, spec.target_mode, 1, derive_seed(spec.seed, {hash_name("detector-target"), key}))
                    .front();
            AttackConfig cfg = base;
            if (spec.detector.training_sample_cap) cfg.sample_cap = spec.detector.training_sample_cap;
            if (spec.detector.training_max_iter) cfg.pgd.max_iter = *spec.detector.training_max_iter;
            const auto fakes = generate_profiles(m, a, train_target, spec.detector.fake_count, cfg,
                                                 derive_seed(spec.seed, {hash_name("detector-fakes"), key}));
            DetectorOptions opts;
            opts.seed = derive_seed(spec.seed, {hash_name("detector"), key});
            detectors.emplace(a, train_detector(m, fakes, spec.detector.normal_count, opts));
        }
    }

    struct Cell {
        AttackKind attack;
        double size;
        std::size_t target_index;
    };
    struct Outcome {
        bool ok = false;
        std::string message;
        std::vector<double> hr, mf_hr, filtered;
        std::optional<double> fpr, fnr;
    };
    std::vector<Cell> cells;
    for (auto a : spec.attacks) {
        // the unattacked cells do not depend on the size, so they are computed once
        const std::vector<double> sizes = a == AttackKind::none ? std::vector<double>{0.0} : spec.attack_sizes;
        for (double s : sizes)
            for (std::size_t k = 0; k < table.targets.size(); ++k) cells.push_back({a, s, k});
    }
    std::vector<Outcome> outcomes(cells.size());

    parallel_for(
        cells.size(),
        [&](std::size_t c) {
            const auto& cell = cells[c];
            const ItemId t = table.targets[cell.target_index];
            auto& out = outcomes[c];
            try {
                const auto cell_seed =
                    derive_seed(spec.seed, {hash_name(to_string(cell.attack)), size_key(cell.size), t});
                const auto count = cell.attack == AttackKind::none ? 0 : fake_user_count(m, cell.size);
                const auto profiles = generate_profiles(m, cell.attack, t, count, base, cell_seed);
                const auto attacked = append_fake_users(m, profiles);
                const ItemId targets[] = {t};
                const auto grid = hit_ratios(attacked, targets, spec.list_lengths, hr_opts);
                out.hr = grid.values[0];
                if (spec.black_box) {
                    MfOptions mf = spec.mf;
                    mf.seed = derive_seed(cell_seed, {hash_name("mf")});
                    const auto model = mf_train(attacked, mf);
                    out.mf_hr = mf_hit_ratios(model, attacked, targets, spec.list_lengths, base.threads).values[0];
                }
                if (auto it = detectors.find(cell.attack); it != detectors.end()) {
                    const auto report = detect(it->second, attacked);
                    out.fpr = report.fpr;
                    out.fnr = report.fnr;
                    out.filtered =
                        filtered_hit_ratios(attacked, report, targets, spec.list_lengths, hr_opts).values[0];
                }
                out.ok = true;
            } catch (const std::exception& e) {
                out.message = e.what();
            }
            if (progress) progress(cell.attack, cell.size, t, out.ok);
        },
        spec.jobs);

    auto mean_of = [](const std::vector<double>& xs) -> std::optional<double> {
        if (xs.empty()) return std::nullopt;
        double s = 0.0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    };
    for (auto a : spec.attacks) {
        for (double size : spec.attack_sizes) {
            const double cell_size = a == AttackKind::none ? 0.0 : size;
            for (std::size_t j = 0; j < spec.list_lengths.size(); ++j) {
                ResultRow row;
                row.attack = a;
                row.attack_size = size;
                row.target_mode = spec.target_mode;
                row.list_length = spec.list_lengths[j];
                std::vector<double> hr, mf, fpr, fnr, filtered;
                for (std::size_t c = 0; c < cells.size(); ++c) {
                    if (cells[c].attack != a || cells[c].size != cell_size) continue;
                    const auto& o = outcomes[c];
                    if (!o.ok) {
                        ++row.failed;
                        continue;
                    }
                    ++row.targets;
                    hr.push_back(o.hr[j]);
                    if (!o.mf_hr.empty()) mf.push_back(o.mf_hr[j]);
                    if (!o.filtered.empty()) filtered.push_back(o.filtered[j]);
                    if (o.fpr) fpr.push_back(*o.fpr);
                    if (o.fnr) fnr.push_back(*o.fnr);
                }
                row.hit_ratio = mean_of(hr).value_or(0.0);
                row.mf_hit_ratio = mean_of(mf);
                row.fpr = mean_of(fpr);
                row.fnr = mean_of(fnr);
                row.filtered_hit_ratio = mean_of(filtered);
                table.rows.push_back(row);
            }
        }
    }
    for (std::size_t c = 0; c < cells.size(); ++c)
        if (!outcomes[c].ok)
            table.failures.push_back(
                {cells[c].attack, cells[c].size, table.targets[cells[c].target_index], outcomes[c].message});
    table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return table;
}

std::string to_csv(const ResultTable& table) {
    std::ostringstream out;
    out << "attack,attack_size,target_mode,N,hit_ratio,mf_hit_ratio,fpr,fnr,filtered_hit_ratio,targets,failed\n";
    for (const auto& r : table.rows)
        out << to_string(r.attack) << ',' << fixed4(r.attack_size) << ',' << to_string(r.target_mode) << ','
            << r.list_length << ',' << fixed4(r.hit_ratio) << ',' << fixed4(r.mf_hit_ratio) << ',' << fixed4(r.fpr)
            << ',' << fixed4(r.fnr) << ',' << fixed4(r.filtered_hit_ratio) << ',' << r.targets << ',' << r.failed
            << '\n';
    return out.str();
}

json to_json(const ResultTable& table) {
    json rows = json::array();
    for (const auto& r : table.rows)
        rows.push_back({{"attack", to_string(r.attack)},
                        {"attack_size", r.attack_size},
                        {"target_mode", to_string(r.target_mode)},
                        {"N", r.list_length},
                        {"hit_ratio", r.hit_ratio},
                        {"mf_hit_ratio", optional_json(r.mf_hit_ratio)},
                        {"fpr", optional_json(r.fpr)},
                        {"fnr", optional_json(r.fnr)},
                        {"filtered_hit_ratio", optional_json(r.filtered_hit_ratio)},
                        {"targets", r.targets},
                        {"failed", r.failed}});
    json failures = json::array();
    for (const auto& f : table.failures)
        failures.push_back({{"attack", to_string(f.attack)},
                            {"attack_size", f.attack_size},
                            {"target", f.target},
                            {"message", f.message}});
    return {{"seed", table.seed},
            {"config_hash", table.config_hash},
            {"wall_seconds", table.wall_seconds},
            {"targets", table.targets},
            {"targets_reused", table.targets_reused},
            {"rows", rows},
            {"failures", failures}};
}

ResultTable result_table_from_json(const json& j) {
    ResultTable t;
    try {
        t.seed = j.at("seed").get<std::uint64_t>();
        t.config_hash = j.at("config_hash").get<std::string>();
        t.wall_seconds = j.at("wall_seconds").get<double>();
        t.targets = j.at("targets").get<std::vector<ItemId>>();
        t.targets_reused = j.at("targets_reused").get<bool>();
        for (const auto& r : j.at("rows")) {
            ResultRow row;
            row.attack = parse_attack(r.at("attack").get<std::string>());
            row.attack_size = r.at("attack_size").get<double>();
            row.target_mode = parse_target_mode(r.at("target_mode").get<std::string>());
            row.list_length = r.at("N").get<std::size_t>();
            row.hit_ratio = r.at("hit_ratio").get<double>();
            row.mf_hit_ratio = optional_from(r, "mf_hit_ratio");
            row.fpr = optional_from(r, "fpr");
            row.fnr = optional_from(r, "fnr");
            row.filtered_hit_ratio = optional_from(r, "filtered_hit_ratio");
            row.targets = r.at("targets").get<std::size_t>();
            row.failed = r.at("failed").get<std::size_t>();
            t.rows.push_back(row);
        }
        for (const auto& f : j.at("failures"))
            t.failures.push_back({parse_attack(f.at("attack").get<std::string>()), f.at("attack_size").get<double>(),
                                  f.at("target").get<ItemId>(), f.at("message").get<std::string>()});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("result table: ") + e.what());
    }
    return t;
}

void emit(const ResultTable& table, TableFormat format, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (format == TableFormat::csv)
        out << to_csv(table);
    else
        out << to_json(table).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace graphpoison

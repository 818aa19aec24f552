#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "graphpoison/experiment.hpp"
#include "support.hpp"

using namespace graphpoison;
using namespace testing;

namespace {

ExperimentSpec toy_spec() {
    ExperimentSpec spec;
    spec.num_targets = 3;
    spec.attack_sizes = {0.1, 0.2};
    spec.list_lengths = {2, 5};
    spec.attack.num_fillers = 3;
    spec.attack.pgd.max_iter = 3;
    spec.attack.sample_cap = 10;
    spec.seed = 5;
    return spec;
}

std::size_t count_lines(const std::string& s) { return std::size_t(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("names round trip") {
    for (auto a : {AttackKind::none, AttackKind::random, AttackKind::average, AttackKind::bandwagon,
                   AttackKind::covisitation, AttackKind::optimized})
        CHECK(parse_attack(to_string(a)) == a);
    CHECK(parse_target_mode("unpopular") == TargetMode::unpopular);
    CHECK(parse_format("csv") == DatasetFormat::csv);
    CHECK_THROWS_AS(parse_attack("shilling"), ConfigError);
}

TEST_CASE("target selection") {
    Rng rng(3);
    const auto m = random_matrix(rng, 20, 15, 0.6);
    SUBCASE("random mode is seeded and distinct") {
        const auto a = select_targets(m, TargetMode::random, 5, 9);
        CHECK(a == select_targets(m, TargetMode::random, 5, 9));
        CHECK(std::set<ItemId>(a.begin(), a.end()).size() == 5);
    }
    SUBCASE("unpopular pool") {
        std::vector<RatingTriple> t;
        for (UserId u = 0; u < 8; ++u)
            for (ItemId i = 0; i < 4; ++i) t.push_back({u, i, 3});
        t.push_back({0, 4, 2});
        t.push_back({1, 5, 2});
        const auto few = RatingMatrix::from_triples(8, 6, t, 5);
        auto picked = select_targets(few, TargetMode::unpopular, 2, 1);
        std::sort(picked.begin(), picked.end());
        CHECK(picked == std::vector<ItemId>{4, 5});
        CHECK_THROWS_AS(select_targets(few, TargetMode::unpopular, 3, 1), ValidationError);
    }
    SUBCASE("no unpopular items") { CHECK_THROWS_AS(select_targets(m, TargetMode::unpopular, 1, 1), ValidationError); }
}

TEST_CASE("movielens unpopular targets") {
    const auto m = load_movielens(movielens_path());
    const auto targets = select_targets(m, TargetMode::unpopular, 10, 42);
    for (auto t : targets) CHECK(m.item_ratings(t).size() <= kUnpopularMaxRatings);
    for (ItemId i = 0; i < m.num_items(); ++i) {
        if (m.item_ratings(i).size() != 5) continue;
        AttackConfig cfg;
        cfg.target = i;
        cfg.sample_cap = std::nullopt;
        CHECK(loss_users(m, cfg).size() == 938);
        break;
    }
}

TEST_CASE("attack configuration files") {
    AttackConfig cfg;
    cfg.lambda = 0.5;
    cfg.sample_cap = std::nullopt;
    cfg.pgd.max_iter = 7;
    cfg.walk.tol = 1e-9;
    const auto back = attack_config_from_json(to_json(cfg));
    CHECK(back.lambda == 0.5);
    CHECK_FALSE(back.sample_cap.has_value());
    CHECK(back.pgd.max_iter == 7);
    CHECK(back.walk.tol == 1e-9);
    CHECK_THROWS_AS(attack_config_from_json(nlohmann::json{{"lamda", 1.0}}), ConfigError);
    const auto partial = attack_config_from_json(nlohmann::json{{"n", 4}});
    CHECK(partial.num_fillers == 4);
    CHECK(partial.alpha == AttackConfig{}.alpha);
}

TEST_CASE("experiment specs and hashes") {
    auto spec = toy_spec();
    const auto back = experiment_spec_from_json(to_json(spec));
    CHECK(to_json(back) == to_json(spec));
    auto other = spec;
    other.jobs = 4;
    other.attack.threads = 3;
    CHECK(config_hash(other) == config_hash(spec));
    other.seed = 6;
    CHECK(config_hash(other) != config_hash(spec));
}

TEST_CASE("result tables") {
    SUBCASE("empty table is header only") {
        const auto csv = to_csv(ResultTable{});
        CHECK(count_lines(csv) == 1);
        CHECK(csv.rfind("attack,attack_size", 0) == 0);
    }
    SUBCASE("json round trip") {
        ResultTable t;
        t.rows.push_back({AttackKind::optimized, 0.03, TargetMode::random, 10, 0.0134, 0.01, 0.05, 0.45, 0.0066, 10, 0});
        t.rows.push_back({AttackKind::none, 0.03, TargetMode::random, 10, 0.0022, std::nullopt, std::nullopt,
                          std::nullopt, std::nullopt, 9, 1});
        t.failures.push_back({AttackKind::none, 0.0, 4, "did not converge"});
        t.targets = {4, 8};
        t.seed = 12;
        t.config_hash = "abc";
        CHECK(result_table_from_json(to_json(t)) == t);
        const auto p = temp_file("table.json");
        emit(t, TableFormat::json, p);
        std::ifstream in(p);
        CHECK(result_table_from_json(nlohmann::json::parse(in)) == t);
    }
}

TEST_CASE("toy experiment") {
    Rng rng(12);
    const auto m = random_matrix(rng, 30, 25, 0.15);
    const auto spec = toy_spec();
    const auto table = run_experiment(spec, m);
    CHECK(table.failures.empty());
    CHECK(table.targets.size() == 3);
    // one row per (attack, size, N)
    CHECK(table.rows.size() == spec.attacks.size() * spec.attack_sizes.size() * spec.list_lengths.size());
    CHECK(count_lines(to_csv(table)) == table.rows.size() + 1);

    SUBCASE("the unattacked rows are plain hit ratios") {
        const auto grid = hit_ratios(m, table.targets, spec.list_lengths);
        for (const auto& row : table.rows) {
            if (row.attack != AttackKind::none) continue;
            const std::size_t j = row.list_length == 2 ? 0 : 1;
            double mean = 0;
            for (std::size_t k = 0; k < 3; ++k) mean += grid.at(k, j);
            CHECK(row.hit_ratio == doctest::Approx(mean / 3.0).epsilon(1e-15));
            CHECK_FALSE(row.fpr.has_value());
        }
    }
    SUBCASE("reruns and worker counts give the same table") {
        auto parallel = spec;
        parallel.jobs = 3;
        parallel.attack.threads = 2;
        const auto again = run_experiment(parallel, m);
        CHECK(again.rows == table.rows);
        CHECK(again.config_hash == table.config_hash);
        CHECK(run_experiment(spec, m) == table);
    }
    SUBCASE("detector and black-box columns") {
        auto full = spec;
        full.attacks = {AttackKind::none, AttackKind::average};
        full.attack_sizes = {0.2};
        full.detector.enabled = true;
        full.detector.normal_count = 20;
        full.detector.fake_count = 20;
        full.black_box = true;
        full.mf.epochs = 5;
        const auto t = run_experiment(full, m);
        for (const auto& row : t.rows) {
            CHECK(row.mf_hit_ratio.has_value());
            CHECK(row.fpr.has_value() == (row.attack != AttackKind::none));
            if (row.fpr) {
                CHECK(*row.fpr >= 0.0);
                CHECK(*row.fpr <= 1.0);
                CHECK(*row.fnr >= 0.0);
                CHECK(*row.fnr <= 1.0);
            }
        }
    }
}

TEST_CASE("failed cells are reported") {
    Rng rng(12);
    const auto m = random_matrix(rng, 30, 25, 0.15);
    auto spec = toy_spec();
    spec.attacks = {AttackKind::none, AttackKind::random};
    spec.attack.walk.max_iter = 1;  // every walk fails to converge
    const auto table = run_experiment(spec, m);
    CHECK_FALSE(table.failures.empty());
    for (const auto& row : table.rows) CHECK(row.failed == 3);
}

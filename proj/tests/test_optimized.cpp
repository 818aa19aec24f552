#include <cmath>

#include "doctest.h"
#include "graphpoison/optimized.hpp"
#include "support.hpp"

using namespace graphpoison;
using namespace testing;

namespace {

// u0: i0 5, i1 3; u1: i1 4, i2 2; u2: i0 1, i3 4; u3: i2 5, i3 3. Target i4 is unrated.
RatingMatrix four_user_matrix() {
    return RatingMatrix::from_triples(
        4, 6, {{0, 0, 5}, {0, 1, 3}, {1, 1, 4}, {1, 2, 2}, {2, 0, 1}, {2, 3, 4}, {3, 2, 5}, {3, 3, 3}, {3, 5, 1}},
        5);
}

AttackConfig four_user_config() {
    AttackConfig cfg;
    cfg.target = 4;
    cfg.top_n = 2;
    cfg.num_fillers = 2;
    cfg.lambda = 2.0;
    cfg.width = 0.05;
    cfg.sample_cap = std::nullopt;
    return cfg;
}

}  // namespace

TEST_CASE("sigmoid surrogate") {
    CHECK(wmw(0.0, 0.01) == 0.5);
    CHECK(wmw(0.01, 0.01) == doctest::Approx(0.7310585786300049).epsilon(1e-14));
    for (double x : {-0.3, -0.01, 0.002, 0.05, 1.0}) CHECK(wmw(x, 0.02) + wmw(-x, 0.02) == doctest::Approx(1.0));
    CHECK(wmw(-50.0, 0.01) == 0.0);
    CHECK(wmw(50.0, 0.01) == 1.0);
    const double h = 1e-7;
    for (double x : {-0.02, 0.0, 0.013})
        CHECK(wmw_derivative(x, 0.01) == doctest::Approx((wmw(x + h, 0.01) - wmw(x - h, 0.01)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("per-user loss") {
    RecommendationList list;
    list.items = {0, 1};
    SUBCASE("target far ahead") {
        const std::vector<double> p{0.01, 0.02, 0.9};
        CHECK(user_loss(p, list, 2, 0.01) < 1e-30);
    }
    SUBCASE("target tied with the list") {
        const std::vector<double> p{0.2, 0.2, 0.2};
        CHECK(user_loss(p, list, 2, 0.01) == 1.0);
    }
    SUBCASE("hand evaluation") {
        const std::vector<double> p{0.3, 0.1, 0.2};
        const double expected = 1.0 / (1.0 + std::exp(-10.0)) + 1.0 / (1.0 + std::exp(10.0));
        CHECK(user_loss(p, list, 2, 0.01) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("initial weights and fake-user edges") {
    AttackConfig cfg;
    cfg.target = 2;
    const auto w = initial_weights(5, cfg);
    CHECK(w.values == std::vector<double>{1.0, 1.0, 0.0, 1.0, 1.0});
    auto v = w;
    v.values[3] = 0.0;
    const auto edges = fake_user_edges(v, cfg);
    CHECK(edges == WeightedEdges{{0, 1.0}, {1, 1.0}, {2, 5.0}, {4, 1.0}});
}

TEST_CASE("loss population") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    CHECK(loss_users(m, cfg) == std::vector<UserId>{0, 1, 2, 3});
    cfg.target = 2;
    CHECK(loss_users(m, cfg) == std::vector<UserId>{0, 2});
    cfg.sample_cap = 1;
    CHECK(loss_users(m, cfg).size() == 1);
    CHECK(loss_users(m, cfg, 3) == loss_users(m, cfg, 3));
}

TEST_CASE("total loss matches dense solves on a four-user instance") {
    const auto m = four_user_matrix();
    const auto cfg = four_user_config();
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        WeightVector w{std::vector<double>(6, 0.0)};
        for (auto& x : w.values) x = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        if (trial == 0) std::fill(w.values.begin(), w.values.end(), 0.0);
        w.values[cfg.target] = 0.0;
        CHECK(total_loss(m, w, cfg) == doctest::Approx(dense_total_loss(m, w, cfg)).epsilon(1e-8));
    }
}

TEST_CASE("objective identities") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    WeightVector w{{1.0, 2.0, 0.5, 0.0, 0.0, 3.0}};
    SUBCASE("lambda zero") {
        cfg.lambda = 0.0;
        CHECK(objective(m, w, cfg) == doctest::Approx(14.25));
        const auto g = grad_F(m, w, cfg);
        for (ItemId i = 0; i < 6; ++i) CHECK(g[i] == (i == cfg.target ? 0.0 : 2.0 * w[i]));
    }
    SUBCASE("zero weights") {
        const WeightVector zero{std::vector<double>(6, 0.0)};
        CHECK(objective(m, zero, cfg) == doctest::Approx(cfg.lambda * total_loss(m, zero, cfg)));
        CHECK(objective(m, zero, cfg) > 0.0);
    }
    SUBCASE("empty loss population") {
        const auto all = RatingMatrix::from_triples(2, 3, {{0, 0, 3}, {1, 0, 4}, {1, 2, 1}}, 5);
        cfg.target = 0;
        const WeightVector v{{0.0, 1.0, 2.0}};
        CHECK(total_loss(all, v, cfg) == 0.0);
        const auto g = grad_F(all, v, cfg);
        CHECK(g == std::vector<double>{0.0, 2.0, 4.0});
    }
}

TEST_CASE("transition partials") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    const NodeId v = 4;
    auto item = [](ItemId i) { return NodeId(5 + i); };
    SUBCASE("two equal weights a, a") {
        // the target edge weighs r_max, so a second edge of weight r_max gives 1 / (4 a)
        WeightVector w{{0.0, 5.0, 0.0, 0.0, 0.0, 0.0}};
        const auto d = grad_Q(m, w, cfg, v, item(1));
        // every other weight only enters through the normalizer: -a / (2a)^2
        REQUIRE(d.size() == 5);
        for (auto [i, value] : d) CHECK(value == doctest::Approx(i == 1 ? 1.0 / 20.0 : -1.0 / 20.0));
    }
    SUBCASE("item whose only neighbor is the fake user") {
        WeightVector w{{0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
        auto lonely = RatingMatrix::from_triples(1, 3, {{0, 0, 2}}, 5);
        cfg.target = 0;
        WeightVector x{{0.0, 2.5, 0.0}};
        CHECK(grad_Q(lonely, x, cfg, NodeId(2 + 1), 1).empty());
    }
    SUBCASE("normal-to-normal edges do not move") {
        WeightVector w{{1.0, 1.0, 1.0, 1.0, 0.0, 1.0}};
        CHECK(grad_Q(m, w, cfg, 0, item(0)).empty());
        // the item row of i0 changes through the fake user's edge, the user row does not
        CHECK_FALSE(grad_Q(m, w, cfg, item(0), 0).empty());
    }
    SUBCASE("quotient rule against finite differences") {
        WeightVector w{{1.0, 2.0, 0.5, 3.0, 0.0, 1.5}};
        const double h = 1e-6;
        for (NodeId x : {v, item(2), item(5)}) {
            for (NodeId y = 0; y < 11; ++y) {
                std::vector<double> analytic(6, 0.0);
                for (auto [i, d] : grad_Q(m, w, cfg, x, y)) analytic[i] = d;
                for (ItemId i = 0; i < 6; ++i) {
                    if (i == cfg.target) continue;
                    auto plus = w, minus = w;
                    plus.values[i] += h;
                    minus.values[i] -= h;
                    const auto qp = build_transition_with_user(m, fake_user_edges(plus, cfg), cfg.edge_cutoff);
                    const auto qm = build_transition_with_user(m, fake_user_edges(minus, cfg), cfg.edge_cutoff);
                    CHECK(analytic[i] == doctest::Approx((qp.at(x, y) - qm.at(x, y)) / (2 * h)).epsilon(1e-6));
                }
            }
        }
    }
}

TEST_CASE("walk sensitivities") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    WeightVector w{{1.0, 2.0, 0.5, 3.0, 0.0, 1.5}};
    SUBCASE("restart-only walk has no sensitivity") {
        cfg.alpha = 1.0;
        const auto j = grad_p(m, w, 0, cfg);
        for (const auto& col : j.values)
            for (double x : col) CHECK(x == 0.0);
    }
    SUBCASE("finite differences of dense solves") {
        const double h = 1e-6;
        std::vector<ItemId> all{0, 1, 2, 3, 5};
        for (UserId u = 0; u < 4; ++u) {
            const auto j = grad_p(m, w, u, cfg, all);
            REQUIRE(j.converged);
            REQUIRE(j.columns == all);
            for (std::size_t c = 0; c < all.size(); ++c) {
                auto plus = w, minus = w;
                plus.values[all[c]] += h;
                minus.values[all[c]] -= h;
                const auto pp = dense_rwr(row_normalized(attacked_weights(m, plus, cfg)), u, cfg.alpha);
                const auto pm = dense_rwr(row_normalized(attacked_weights(m, minus, cfg)), u, cfg.alpha);
                for (Eigen::Index x = 0; x < pp.size(); ++x) {
                    const double fd = (pp(x) - pm(x)) / (2 * h);
                    const double got = j.values[c][std::size_t(x)];
                    CHECK(std::abs(got - fd) <= 1e-4 * std::max(std::abs(fd), 1e-5));
                }
            }
        }
    }
    SUBCASE("default active set") {
        AttackConfig small = cfg;
        small.num_fillers = 1;
        small.active_set_factor = 2;
        const auto active = active_items(w, small);
        CHECK(active == std::vector<ItemId>{1, 3, 4});
        const auto j = grad_p(m, w, 0, small);
        CHECK(j.columns == active);
        // a zero-weight item outside the active set has no column at all
        CHECK(std::find(j.columns.begin(), j.columns.end(), ItemId{2}) == j.columns.end());
    }
}

TEST_CASE("objective gradient against finite differences") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const auto toy = random_toy(rng);
        const auto cmp = compare_with_finite_differences(toy);
        CHECK(cmp.compared > 0);
        CHECK(cmp.worst_relative_error <= 1e-3);
    }
}

TEST_CASE("saturated losses leave only the regularizer gradient") {
    // users 0 and 1 can be recommended items 2 and 3; the fake user pulls the target 3 far ahead of 2
    const auto m = RatingMatrix::from_triples(
        3, 4, {{0, 0, 5}, {0, 1, 1}, {1, 0, 5}, {1, 1, 1}, {2, 3, 5}, {2, 0, 1}, {2, 2, 1}}, 5);
    AttackConfig cfg;
    cfg.target = 3;
    cfg.top_n = 2;
    cfg.num_fillers = 1;
    cfg.width = 1e-4;
    cfg.sample_cap = std::nullopt;
    const WeightVector w{{5.0, 0.2, 0.0, 0.0}};
    const auto g = grad_F(m, w, cfg);
    for (ItemId i = 0; i < 4; ++i)
        if (i != cfg.target) CHECK(std::abs(g[i] - 2.0 * w[i]) <= 1e-6);
}

TEST_CASE("projected gradient descent") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    SUBCASE("no iterations") {
        cfg.pgd.max_iter = 0;
        const auto r = optimize_weights(m, cfg);
        CHECK(r.weights.values == initial_weights(6, cfg).values);
        CHECK(r.trace.records.size() == 1);
    }
    SUBCASE("descent stays in the box and lowers F") {
        cfg.pgd.step = 5.0;
        const auto r = optimize_weights(m, cfg);
        REQUIRE(r.trace.records.size() >= 2);
        for (double x : r.weights.values) {
            CHECK(x >= 0.0);
            CHECK(x <= 5.0);
        }
        CHECK(r.weights[cfg.target] == 0.0);
        for (std::size_t k = 1; k < r.trace.records.size(); ++k)
            CHECK(r.trace.records[k].objective <= r.trace.records[k - 1].objective);
        CHECK(r.trace.records.back().objective <= r.trace.records.front().objective);
        CHECK(objective(m, r.weights, cfg) == doctest::Approx(r.trace.records.back().objective));
    }
}

TEST_CASE("profile synthesis") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    SUBCASE("single filler at the unique argmax") {
        cfg.num_fillers = 1;
        const WeightVector w{{0.1, 0.2, 3.0, 0.4, 0.0, 0.5}};
        const auto p = synthesize_profile(m, w, cfg, 1);
        REQUIRE(p.fillers.size() == 1);
        CHECK(p.fillers[0].first == 2);
        CHECK(p.target == 4);
        CHECK(p.target_rating == 5);
    }
    SUBCASE("equal weights pick the lowest ids") {
        cfg.num_fillers = 3;
        const WeightVector w{std::vector<double>(6, 1.0)};
        const auto p = synthesize_profile(m, w, cfg, 1);
        REQUIRE(p.fillers.size() == 3);
        CHECK(p.fillers[0].first == 0);
        CHECK(p.fillers[1].first == 1);
        CHECK(p.fillers[2].first == 2);
    }
    SUBCASE("zero-variance items get their mean") {
        // item 5 is rated once, with 1
        cfg.num_fillers = 1;
        const WeightVector w{{0.0, 0.0, 0.0, 0.0, 0.0, 4.0}};
        CHECK(synthesize_profile(m, w, cfg, 9).fillers[0] == std::pair<ItemId, int>{5, 1});
    }
}

TEST_CASE("sequential attack") {
    const auto m = four_user_matrix();
    auto cfg = four_user_config();
    cfg.pgd.max_iter = 5;
    SUBCASE("no fake users") {
        cfg.num_fake = 0;
        CHECK(run_attack(m, cfg).empty());
    }
    SUBCASE("second profile is optimized against the first") {
        cfg.num_fake = 2;
        cfg.seed = 31;
        const auto profiles = run_attack(m, cfg);
        REQUIRE(profiles.size() == 2);
        const auto first = optimize_weights(m, cfg, loss_users(m, cfg, 0));
        CHECK(profiles[0] == synthesize_profile(m, first.weights, cfg, derive_seed(31, {hash_name("synth"), 0})));
        const auto with_first = append_fake_users(m, std::span(profiles.data(), 1));
        const auto second = optimize_weights(with_first, cfg, loss_users(with_first, cfg, 1));
        CHECK(profiles[1] ==
              synthesize_profile(with_first, second.weights, cfg, derive_seed(31, {hash_name("synth"), 1})));
        for (const auto& p : profiles) CHECK(p.num_rated() <= cfg.num_fillers + 1);
    }
    SUBCASE("scale mismatch") {
        cfg.r_max = 10;
        cfg.num_fake = 1;
        CHECK_THROWS_AS(run_attack(m, cfg), ValidationError);
    }
}

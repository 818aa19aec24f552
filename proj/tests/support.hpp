#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "graphpoison/detection.hpp"
#include "graphpoison/graph.hpp"
#include "graphpoison/optimized.hpp"
#include "graphpoison/ratings.hpp"
#include "graphpoison/rng.hpp"

namespace testing {

using namespace graphpoison;

/// Random matrix with every user and item holding at least one rating.
inline RatingMatrix random_matrix(Rng& rng, std::size_t users, std::size_t items, double density, int r_max = 5) {
    std::bernoulli_distribution keep(density);
    std::uniform_int_distribution<int> score(1, r_max);
    std::vector<std::vector<int>> r(users, std::vector<int>(items, 0));
    for (auto& row : r)
        for (auto& x : row)
            if (keep(rng)) x = score(rng);
    for (std::size_t u = 0; u < users; ++u) r[u][std::uniform_int_distribution<std::size_t>(0, items - 1)(rng)] = score(rng);
    for (std::size_t i = 0; i < items; ++i) r[std::uniform_int_distribution<std::size_t>(0, users - 1)(rng)][i] = score(rng);
    std::vector<RatingTriple> triples;
    for (std::size_t u = 0; u < users; ++u)
        for (std::size_t i = 0; i < items; ++i)
            if (r[u][i] > 0) triples.push_back({UserId(u), ItemId(i), r[u][i]});
    return RatingMatrix::from_triples(users, items, std::move(triples), r_max);
}

inline Eigen::MatrixXd dense_transition(const TransitionMatrix& q) {
    const auto n = q.num_nodes();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (NodeId x = 0; x < n; ++x)
        for (NodeId y = 0; y < n; ++y) d(x, y) = q.at(x, y);
    return d;
}

/// Direct solve of p = (1 - alpha) Q^T p + alpha e_start.
inline Eigen::VectorXd dense_rwr(const Eigen::MatrixXd& q, NodeId start, double alpha) {
    const auto n = q.rows();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(start) = alpha;
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - (1.0 - alpha) * q.transpose();
    return a.partialPivLu().solve(e);
}

inline std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("graphpoison-test-" + name);
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

inline std::filesystem::path movielens_path() {
    return std::filesystem::path(GRAPHPOISON_DATA_DIR) / "ml-100k" / "u.data";
}

/// Symmetric weight matrix of m plus the fake user of w (node m.num_users(), items after it).
inline Eigen::MatrixXd attacked_weights(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg) {
    const auto users = m.num_users();
    const auto n = users + 1 + m.num_items();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    auto link = [&](std::size_t x, std::size_t y, double v) {
        a(Eigen::Index(x), Eigen::Index(y)) = v;
        a(Eigen::Index(y), Eigen::Index(x)) = v;
    };
    for (const auto& t : m.triples()) link(t.user, users + 1 + t.item, t.score);
    for (ItemId i = 0; i < m.num_items(); ++i) {
        const double v = i == cfg.target ? double(cfg.r_max) : w[i];
        if (i == cfg.target || v >= cfg.edge_cutoff) link(users, users + 1 + i, v);
    }
    return a;
}

inline Eigen::MatrixXd row_normalized(Eigen::MatrixXd a) {
    for (Eigen::Index x = 0; x < a.rows(); ++x) {
        const double s = a.row(x).sum();
        if (s > 0) a.row(x) /= s;
    }
    return a;
}

/// Loss of the fake-user instance recomputed from dense solves; S is every
/// normal user who has not rated the target.
inline double dense_total_loss(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg) {
    const auto q = row_normalized(attacked_weights(m, w, cfg));
    const auto first_item = Eigen::Index(m.num_users() + 1);
    double loss = 0.0;
    for (UserId u = 0; u < m.num_normal_users(); ++u) {
        if (m.rating(u, cfg.target) != 0) continue;
        const auto p = dense_rwr(q, u, cfg.alpha);
        std::vector<ItemId> items;
        for (ItemId i = 0; i < m.num_items(); ++i)
            if (m.rating(u, i) == 0) items.push_back(i);
        std::sort(items.begin(), items.end(), [&](ItemId a, ItemId b) {
            const double pa = p(first_item + a), pb = p(first_item + b);
            return pa != pb ? pa > pb : a < b;
        });
        if (items.size() > cfg.top_n) items.resize(cfg.top_n);
        const double pt = p(first_item + cfg.target);
        for (auto i : items) loss += 1.0 / (1.0 + std::exp(-(p(first_item + i) - pt) / cfg.width));
    }
    return loss;
}

/// A toy attack instance: a random matrix of at most 12 graph nodes with the
/// fake user included, weights strictly inside (0, r_max).
struct ToyInstance {
    RatingMatrix m;
    WeightVector w;
    AttackConfig cfg;
};

inline ToyInstance random_toy(Rng& rng) {
    const auto users = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    const auto items = std::uniform_int_distribution<std::size_t>(3, 11 - users)(rng);
    ToyInstance toy;
    toy.m = random_matrix(rng, users, items, 0.45);
    toy.cfg.target = std::uniform_int_distribution<ItemId>(0, ItemId(items - 1))(rng);
    toy.cfg.num_fillers = 1;
    toy.cfg.top_n = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    toy.cfg.alpha = std::uniform_real_distribution<double>(0.1, 0.6)(rng);
    toy.cfg.lambda = std::uniform_real_distribution<double>(0.5, 20.0)(rng);
    toy.cfg.width = std::uniform_real_distribution<double>(0.01, 0.2)(rng);
    toy.cfg.sample_cap = std::nullopt;
    toy.cfg.walk.tol = 1e-15;
    toy.cfg.walk.max_iter = 100000;
    toy.cfg.jacobian = toy.cfg.walk;
    toy.cfg.threads = 1;
    toy.w.values.assign(items, 0.0);
    for (auto& x : toy.w.values) x = std::uniform_real_distribution<double>(0.3, 4.7)(rng);
    toy.w.values[toy.cfg.target] = 0.0;
    return toy;
}

struct GradientComparison {
    std::size_t compared = 0;
    double worst_relative_error = 0.0;
};

/// Compares grad_F with central differences of objective() on every coordinate
/// whose analytic magnitude exceeds 1e-10.
inline GradientComparison compare_with_finite_differences(const ToyInstance& toy, double h = 1e-6) {
    const auto g = grad_F(toy.m, toy.w, toy.cfg);
    GradientComparison out;
    for (ItemId i = 0; i < toy.w.size(); ++i) {
        if (i == toy.cfg.target || std::abs(g[i]) <= 1e-10) continue;
        auto plus = toy.w, minus = toy.w;
        plus.values[i] += h;
        minus.values[i] -= h;
        const double fd = (objective(toy.m, plus, toy.cfg) - objective(toy.m, minus, toy.cfg)) / (2 * h);
        const double rel = std::abs(g[i] - fd) / std::max(std::abs(g[i]), std::abs(fd));
        out.worst_relative_error = std::max(out.worst_relative_error, rel);
        ++out.compared;
    }
    return out;
}

/// The five detection features of every user from a plain scan of the rating
/// triples (users without ratings get zeros).
inline std::vector<std::array<double, 5>> brute_force_features(const RatingMatrix& m) {
    const auto all = m.triples();
    std::map<ItemId, std::pair<double, std::size_t>> item;  // rating sum, count
    for (const auto& t : all) {
        item[t.item].first += t.score;
        ++item[t.item].second;
    }
    std::map<UserId, std::vector<std::pair<ItemId, int>>> by_user;
    for (const auto& t : all) by_user[t.user].emplace_back(t.item, t.score);
    std::vector<std::array<double, 5>> out(m.num_users(), {0, 0, 0, 0, 0});
    for (const auto& [u, mine] : by_user) {
        double rdma_num = 0, wdma_num = 0, var_num = 0, top_sum = 0, rest_sum = 0;
        std::size_t top = 0, rest = 0;
        for (auto [i, r] : mine) {
            const auto [sum, o] = item[i];
            const double dev = r - sum / double(o);
            rdma_num += std::abs(dev) / double(o);
            wdma_num += std::abs(dev) / (double(o) * double(o));
            var_num += dev * dev;
            if (r == m.r_max()) {
                top_sum += r;
                ++top;
            } else {
                rest_sum += r;
                ++rest;
            }
        }
        const double size = double(mine.size());
        const double fmtd =
            top == 0 || rest == 0 ? 0.0 : std::abs(top_sum / double(top) - rest_sum / double(rest));
        out[u] = {rdma_num / size, rdma_num, wdma_num / size, var_num / size, fmtd};
    }
    return out;
}

}  // namespace testing

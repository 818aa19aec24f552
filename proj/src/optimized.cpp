#include "graphpoison/optimized.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "graphpoison/parallel.hpp"
#include "graphpoison/rng.hpp"

namespace graphpoison {

namespace {

double effective_weight(const WeightVector& w, ItemId i, const AttackConfig& cfg) {
    const double x = w.values[i];
    return (i != cfg.target && x > 0.0 && x >= cfg.edge_cutoff) ? x : 0.0;
}

std::vector<double> item_rating_sums(const RatingMatrix& m) {
    std::vector<double> s(m.num_items(), 0.0);
    for (ItemId i = 0; i < m.num_items(); ++i)
        for (const auto& e : m.item_ratings(i)) s[i] += e.score;
    return s;
}

void check_weights(const WeightVector& w, const RatingMatrix& m) {
    if (w.size() != m.num_items())
        throw ValidationError("weight vector has " + std::to_string(w.size()) + " entries, expected " +
                              std::to_string(m.num_items()));
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!std::isfinite(w.values[i]) || w.values[i] < 0.0)
            throw NumericalError("weight " + std::to_string(i) + " is negative or not finite");
}

// Items ordered by descending weight, ties by ascending id, target excluded.
std::vector<ItemId> items_by_weight(const WeightVector& w, ItemId target) {
    std::vector<ItemId> order;
    order.reserve(w.size());
    for (ItemId i = 0; i < w.size(); ++i)
        if (i != target) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) { return w.values[a] > w.values[b]; });
    return order;
}

// Column c of a node-major block from a cached solution, linearly
// extrapolated when the solution before it is available.
void warm_column(std::vector<double>& block, std::size_t c, std::span<const double> last,
                 std::span<const double> before) {
    constexpr std::size_t B = kBlockColumns;
    if (before.size() == last.size())
        for (std::size_t i = 0; i < last.size(); ++i) block[i * B + c] = 2.0 * last[i] - before[i];
    else
        for (std::size_t i = 0; i < last.size(); ++i) block[i * B + c] = last[i];
}

}  // namespace

void AttackConfig::validate(std::size_t num_items) const {
    auto fail = [](const std::string& what) { throw ValidationError("attack config: " + what); };
    if (target >= num_items) fail("target item " + std::to_string(target) + " out of range");
    if (!(width > 0.0)) fail("width b must be > 0");
    if (!(lambda >= 0.0)) fail("lambda must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) fail("alpha must lie in (0, 1]");
    if (num_fillers + 1 > num_items) fail("n + 1 exceeds the number of items");
    if (r_max < 1) fail("r_max must be >= 1");
    if (top_n == 0) fail("N must be >= 1");
    if (!(pgd.step > 0.0)) fail("PGD step must be > 0");
    if (list_refresh_every == 0) fail("list refresh period must be >= 1");
    if (!(edge_cutoff >= 0.0)) fail("edge cutoff must be >= 0");
    if (sample_cap && *sample_cap == 0) fail("sample cap must be >= 1");
}

double WeightVector::squared_norm() const {
    double s = 0.0;
    for (double x : values) s += x * x;
    return s;
}

double wmw(double x, double b) {
    return 1.0 / (1.0 + std::exp(-x / b));
}

double wmw_derivative(double x, double b) {
    const double g = wmw(x, b);
    return g * (1.0 - g) / b;
}

double user_loss(std::span<const double> item_probs, const RecommendationList& list, ItemId t, double b) {
    double loss = 0.0;
    const double pt = item_probs[t];
    for (auto i : list.items) loss += wmw(item_probs[i] - pt, b);
    return loss;
}

WeightVector initial_weights(std::size_t num_items, const AttackConfig& cfg) {
    WeightVector w;
    w.values.assign(num_items, num_items ? static_cast<double>(cfg.r_max) / static_cast<double>(num_items) : 0.0);
    if (cfg.target < num_items) w.values[cfg.target] = 0.0;
    return w;
}

WeightedEdges fake_user_edges(const WeightVector& w, const AttackConfig& cfg) {
    WeightedEdges edges;
    edges.reserve(w.size());
    for (ItemId i = 0; i < w.size(); ++i) {
        if (i == cfg.target)
            edges.emplace_back(i, static_cast<double>(cfg.r_max));
        else if (w.values[i] > 0.0)
            edges.emplace_back(i, w.values[i]);
    }
    return edges;
}

std::vector<UserId> loss_users(const RatingMatrix& m, const AttackConfig& cfg, std::uint64_t stream) {
    auto users = unrated_users(m, cfg.target);
    if (cfg.sample_cap && users.size() > *cfg.sample_cap) {
        Rng rng(derive_seed(cfg.seed, {hash_name("loss-users"), stream}));
        users = sample_without_replacement(rng, std::move(users), *cfg.sample_cap);
        std::sort(users.begin(), users.end());
    }
    return users;
}

void WarmStartCache::Entry::push(std::span<const double> x, std::size_t nodes_of_users) {
    if (user_nodes != nodes_of_users || current.size() != x.size()) previous.clear();
    else std::swap(previous, current);
    current.assign(x.begin(), x.end());
    user_nodes = nodes_of_users;
}

WarmStartCache::Entry* WarmStartCache::find(std::unordered_map<std::uint32_t, Entry>& map, std::uint32_t key,
                                            std::size_t user_nodes) {
    auto it = map.find(key);
    if (it == map.end() || it->second.current.empty()) return nullptr;
    auto& e = it->second;
    if (e.user_nodes > user_nodes) {
        e = Entry{};
        return nullptr;
    }
    if (e.user_nodes < user_nodes) {
        // new user nodes sit between the old users and the items
        e.current.insert(e.current.begin() + static_cast<std::ptrdiff_t>(e.user_nodes), user_nodes - e.user_nodes,
                         0.0);
        e.previous.clear();
        e.user_nodes = user_nodes;
    }
    return &e;
}

AttackObjective::AttackObjective(const RatingMatrix& m, AttackConfig cfg, std::vector<UserId> users,
                                 WarmStartCache* warm)
    : m_(m),
      cfg_(std::move(cfg)),
      users_(std::move(users)),
      warm_(warm ? warm : &own_cache_),
      item_strength_(item_rating_sums(m)) {
    cfg_.validate(m.num_items());
    for (auto u : users_) {
        if (u >= m.num_normal_users()) throw ValidationError("loss users must be normal users");
        warm_->walk_slot(u);  // create entries up front; workers only touch their own
    }
    states_.resize(users_.size());
}

AttackObjective::Value AttackObjective::evaluate(const WeightVector& w, bool refresh_lists) {
    constexpr std::size_t B = kBlockColumns;
    check_weights(w, m_);
    w_ = w;
    w_.values[cfg_.target] = 0.0;
    q_ = build_transition_with_user(m_, fake_user_edges(w_, cfg_), cfg_.edge_cutoff);
    const bool rebuild = refresh_lists || !evaluated_;
    const auto n = q_.num_nodes();
    const auto user_nodes = q_.num_users();
    const auto num_blocks = (users_.size() + B - 1) / B;
    std::vector<double> losses(users_.size(), 0.0);

    parallel_for(
        num_blocks,
        [&](std::size_t b) {
            const std::size_t first = b * B;
            const std::size_t cols = std::min(B, users_.size() - first);
            std::vector<double> x(n * B, 0.0), rhs(n * B, 0.0);
            for (std::size_t c = 0; c < cols; ++c) {
                const NodeId s = q_.user_node(users_[first + c]);
                // an isolated start keeps all its mass
                rhs[s * B + c] = q_.neighbors(s).empty() ? 1.0 : cfg_.alpha;
                if (auto* cached = warm_->find_walk(users_[first + c], user_nodes))
                    warm_column(x, c, cached->current, cached->previous);
                else
                    x[s * B + c] = 1.0;
            }
            const auto status = solve_block(q_, SweepKind::propagation, rhs, cfg_.alpha, x, cfg_.walk);
            for (std::size_t c = 0; c < cols; ++c) {
                const UserId u = users_[first + c];
                if (!status.converged)
                    throw NumericalError("walk from user " + m_.user_label(u) + " did not converge in " +
                                         std::to_string(status.iterations) + " sweeps");
                auto& st = states_[first + c];
                st.walk.resize(n);
                for (std::size_t i = 0; i < n; ++i) st.walk[i] = x[i * B + c];
                std::span<const double> items(st.walk.data() + user_nodes, m_.num_items());
                if (rebuild) st.list = top_n_by_score(m_, u, items, cfg_.top_n).items;
                const double pt = items[cfg_.target];
                double loss = 0.0;
                for (auto i : st.list) loss += wmw(items[i] - pt, cfg_.width);
                losses[first + c] = loss;
                warm_->walk_slot(u).push(st.walk, user_nodes);
            }
        },
        cfg_.threads);

    evaluated_ = true;
    Value v;
    for (double l : losses) v.loss += l;
    v.regularizer = w_.squared_norm();
    v.objective = v.regularizer + cfg_.lambda * v.loss;
    return v;
}

std::vector<double> AttackObjective::gradient() {
    constexpr std::size_t B = kBlockColumns;
    if (!evaluated_) throw std::logic_error("AttackObjective::gradient() before evaluate()");
    const auto ni = m_.num_items();
    const auto n = q_.num_nodes();
    const NodeId v = fake_node();
    const auto item0 = q_.num_users();
    const double damp = 1.0 - cfg_.alpha;
    std::vector<double> grad(ni, 0.0);
    if (damp == 0.0 || users_.empty()) {
        for (ItemId i = 0; i < ni; ++i) grad[i] = 2.0 * w_.values[i];
        grad[cfg_.target] = 0.0;
        return grad;
    }

    // unit adjoints Y_z = (1 - alpha) Q Y_z + e_z for every item some loss touches
    std::vector<ItemId> touched{cfg_.target};
    for (const auto& st : states_) touched.insert(touched.end(), st.list.begin(), st.list.end());
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    std::vector<std::size_t> column_of(ni, 0);
    for (std::size_t k = 0; k < touched.size(); ++k) {
        column_of[touched[k]] = k;
        warm_->adjoint_slot(touched[k]);
    }
    std::vector<std::vector<double>> unit(touched.size());
    parallel_for(
        (touched.size() + B - 1) / B,
        [&](std::size_t b) {
            const std::size_t first = b * B;
            const std::size_t cols = std::min(B, touched.size() - first);
            std::vector<double> y(n * B, 0.0), rhs(n * B, 0.0);
            for (std::size_t c = 0; c < cols; ++c) {
                const NodeId z = item0 + touched[first + c];
                rhs[z * B + c] = 1.0;
                if (auto* cached = warm_->find_adjoint(touched[first + c], item0))
                    warm_column(y, c, cached->current, cached->previous);
                else
                    y[z * B + c] = 1.0;
            }
            const auto status = solve_block(q_, SweepKind::adjoint, rhs, cfg_.alpha, y, cfg_.jacobian);
            if (!status.converged)
                throw NumericalError("adjoint solve for item " + std::to_string(touched[first]) +
                                     " and its block did not converge in " + std::to_string(status.iterations) +
                                     " sweeps");
            for (std::size_t c = 0; c < cols; ++c) {
                auto& col = unit[first + c];
                col.resize(n);
                for (std::size_t i = 0; i < n; ++i) col[i] = y[i * B + c];
                warm_->adjoint_slot(touched[first + c]).push(col, item0);
            }
        },
        cfg_.threads);

    const double fake_strength = q_.strength(v);
    std::vector<double> inv_strength(ni, 0.0);
    for (ItemId i = 0; i < ni; ++i) {
        const double denom = item_strength_[i] + effective_weight(w_, i, cfg_);
        if (denom > 0.0) inv_strength[i] = 1.0 / denom;
    }
    const auto num_blocks = (users_.size() + B - 1) / B;
    std::vector<std::vector<double>> per_block(num_blocks);

    parallel_for(
        num_blocks,
        [&](std::size_t b) {
            const std::size_t first = b * B;
            const std::size_t cols = std::min(B, users_.size() - first);
            auto& g = per_block[b];
            g.assign(ni, 0.0);
            std::vector<double> y(ni + 1), c_item(ni + 1);
            for (std::size_t c = 0; c < cols; ++c) {
                const auto& st = states_[first + c];
                const auto& p = st.walk;
                const double pt = p[item0 + cfg_.target];
                // this user's adjoint right-hand side, sparse over items
                std::vector<std::pair<ItemId, double>> rhs;
                double target_coef = 0.0;
                for (auto i : st.list) {
                    const double d = wmw_derivative(p[item0 + i] - pt, cfg_.width);
                    rhs.emplace_back(i, d);
                    target_coef -= d;
                }
                rhs.emplace_back(cfg_.target, target_coef);
                // y over the items (slots 0..ni-1) and the fake user (slot ni)
                std::fill(y.begin(), y.end(), 0.0);
                std::fill(c_item.begin(), c_item.end(), 0.0);
                for (const auto& [z, coef] : rhs) {
                    const auto& col = unit[column_of[z]];
                    for (ItemId i = 0; i < ni; ++i) y[i] += coef * col[item0 + i];
                    y[ni] += coef * col[v];
                    c_item[z] += coef;
                }
                // at the fixed point (Q y)_x = (y_x - rhs_x) / (1 - alpha)
                const double ybar_fake = y[ni] / damp;
                const double pv = p[v];
                for (ItemId i = 0; i < ni; ++i) {
                    if (i == cfg_.target) continue;
                    const double ybar_item = (y[i] - c_item[i]) / damp;
                    const double term =
                        pv * (y[i] - ybar_fake) / fake_strength + p[item0 + i] * (y[ni] - ybar_item) * inv_strength[i];
                    g[i] += damp * term;
                }
            }
        },
        cfg_.threads);

    for (const auto& g : per_block)
        for (ItemId i = 0; i < ni; ++i) grad[i] += g[i];
    for (ItemId i = 0; i < ni; ++i) grad[i] = 2.0 * w_.values[i] + cfg_.lambda * grad[i];
    grad[cfg_.target] = 0.0;
    return grad;
}

double total_loss(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg) {
    AttackObjective obj(m, cfg, loss_users(m, cfg));
    return obj.evaluate(w).loss;
}

double objective(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg) {
    AttackObjective obj(m, cfg, loss_users(m, cfg));
    return obj.evaluate(w).objective;
}

std::vector<double> grad_F(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg) {
    AttackObjective obj(m, cfg, loss_users(m, cfg));
    obj.evaluate(w);
    return obj.gradient();
}

std::vector<std::pair<ItemId, double>> grad_Q(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg,
                                              NodeId x, NodeId y) {
    cfg.validate(m.num_items());
    check_weights(w, m);
    const auto nu = m.num_users() + 1;
    const auto n = nu + m.num_items();
    if (x >= n || y >= n) throw ValidationError("node id out of range");
    const NodeId v = static_cast<NodeId>(m.num_users());
    auto is_item = [&](NodeId z) { return z >= nu; };
    auto item_of = [&](NodeId z) { return static_cast<ItemId>(z - nu); };
    auto weight_of = [&](ItemId i) {
        return i == cfg.target ? static_cast<double>(cfg.r_max) : effective_weight(w, i, cfg);
    };

    std::vector<std::pair<ItemId, double>> out;
    if (x == v && is_item(y)) {
        double total = 0.0;
        for (ItemId i = 0; i < m.num_items(); ++i) total += weight_of(i);
        if (!(total > 0.0)) throw NumericalError("fake user row has zero total weight");
        const ItemId j = item_of(y);
        const double wj = weight_of(j);
        for (ItemId i = 0; i < m.num_items(); ++i) {
            if (i == cfg.target) continue;
            const double d = ((i == j ? total : 0.0) - wj) / (total * total);
            if (d != 0.0) out.emplace_back(i, d);
        }
        return out;
    }
    if (is_item(x) && !is_item(y)) {
        const ItemId k = item_of(x);
        if (k == cfg.target) return out;
        double base = 0.0;
        for (const auto& e : m.item_ratings(k)) base += e.score;
        const double total = base + weight_of(k);
        if (!(total > 0.0)) throw NumericalError("item " + std::to_string(k) + " row has zero total weight");
        const double r = (y == v) ? weight_of(k) : static_cast<double>(m.rating(y, k));
        if (y != v && r == 0.0) return out;
        // dQ_ky/dw_k = ([y == v] * total - r) / total^2
        const double d = ((y == v ? total : 0.0) - r) / (total * total);
        if (d != 0.0) out.emplace_back(k, d);
    }
    return out;
}

std::vector<ItemId> active_items(const WeightVector& w, const AttackConfig& cfg) {
    auto order = items_by_weight(w, cfg.target);
    const auto k = std::min(order.size(), cfg.active_set_factor * cfg.num_fillers);
    std::vector<ItemId> active(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    active.push_back(cfg.target);
    std::sort(active.begin(), active.end());
    return active;
}

WalkJacobian grad_p(const RatingMatrix& m, const WeightVector& w, UserId u, const AttackConfig& cfg,
                    std::optional<std::vector<ItemId>> active) {
    cfg.validate(m.num_items());
    check_weights(w, m);
    if (u >= m.num_users()) throw ValidationError("user out of range");
    const auto q = build_transition_with_user(m, fake_user_edges(w, cfg), cfg.edge_cutoff);
    const auto p = solve_rwr(q, q.user_node(u), cfg.alpha, cfg.walk);
    if (!p.converged) throw NumericalError("walk did not converge");

    WalkJacobian jac;
    jac.columns = active ? std::move(*active) : active_items(w, cfg);
    const NodeId v = static_cast<NodeId>(m.num_users());
    const double damp = 1.0 - cfg.alpha;
    const auto item_sums = item_rating_sums(m);
    double fake_total = 0.0;
    for (ItemId i = 0; i < m.num_items(); ++i)
        fake_total += i == cfg.target ? cfg.r_max : effective_weight(w, i, cfg);

    for (auto k : jac.columns) {
        if (k >= m.num_items()) throw ValidationError("active item out of range");
        std::vector<double> rhs(q.num_nodes(), 0.0);
        if (k != cfg.target && cfg.alpha < 1.0) {
            // fake user's row: dQ_vz/dw_k = ([z == k] W - w_z) / W^2
            const double pv = p.probs[v];
            for (ItemId z = 0; z < m.num_items(); ++z) {
                const double wz = z == cfg.target ? cfg.r_max : effective_weight(w, z, cfg);
                const double d = ((z == k ? fake_total : 0.0) - wz) / (fake_total * fake_total);
                rhs[q.item_node(z)] += damp * pv * d;
            }
            // item k's row: renormalized by s_k + w_k
            const double total = item_sums[k] + effective_weight(w, k, cfg);
            if (total > 0.0) {
                const double pk = p.probs[q.item_node(k)];
                const double wk = effective_weight(w, k, cfg);
                rhs[v] += damp * pk * (total - wk) / (total * total);
                for (const auto& e : m.item_ratings(k)) rhs[e.index] += damp * pk * (-e.score) / (total * total);
            }
        }
        auto sol = solve_propagation(q, rhs, cfg.alpha, cfg.jacobian);
        jac.converged = jac.converged && sol.converged;
        jac.values.push_back(std::move(sol.values));
    }
    return jac;
}

OptimizationResult optimize_weights(const RatingMatrix& m, const AttackConfig& cfg) {
    return optimize_weights(m, cfg, loss_users(m, cfg));
}

OptimizationResult optimize_weights(const RatingMatrix& m, const AttackConfig& cfg, std::vector<UserId> users,
                                    WarmStartCache* warm) {
    cfg.validate(m.num_items());
    AttackObjective obj(m, cfg, std::move(users), warm);
    OptimizationResult result;
    auto& w = result.weights;
    w = initial_weights(m.num_items(), cfg);
    auto& trace = result.trace;
    double step = cfg.pgd.step;

    auto record = [&](const AttackObjective::Value& val, std::size_t clipped) {
        trace.records.push_back({val.objective, val.loss, val.regularizer, clipped, step});
        if (!std::isfinite(val.objective))
            throw OptimizationError("objective is not finite at PGD iteration " +
                                        std::to_string(trace.records.size() - 1),
                                    trace);
    };

    auto current = obj.evaluate(w, true);
    record(current, 0);
    if (cfg.pgd.max_iter == 0) return result;
    auto grad = obj.gradient();
    const double hi = static_cast<double>(cfg.r_max);

    for (std::size_t it = 1; it <= cfg.pgd.max_iter; ++it) {
        const bool refresh = it % cfg.list_refresh_every == 0;
        bool accepted = false;
        WeightVector next;
        AttackObjective::Value candidate;
        std::size_t clipped = 0;
        for (std::size_t h = 0; h <= cfg.pgd.max_halvings; ++h) {
            next = w;
            clipped = 0;
            for (ItemId i = 0; i < w.size(); ++i) {
                if (i == cfg.target) continue;
                const double raw = w.values[i] - step * grad[i];
                if (raw < 0.0 || raw > hi) ++clipped;
                next.values[i] = std::clamp(raw, 0.0, hi);
            }
            candidate = obj.evaluate(next, refresh);
            if (!std::isfinite(candidate.objective)) {
                record(candidate, clipped);  // throws
            }
            if (candidate.objective <= current.objective) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // the objective's cached state belongs to the rejected point; realign before leaving
            obj.evaluate(w, refresh);
            break;
        }
        double change = 0.0;
        for (ItemId i = 0; i < w.size(); ++i) change = std::max(change, std::abs(next.values[i] - w.values[i]));
        w = std::move(next);
        current = candidate;
        record(current, clipped);
        if (change <= cfg.pgd.stop_tol) break;
        if (it < cfg.pgd.max_iter) grad = obj.gradient();
    }
    return result;
}

FakeUserProfile synthesize_profile(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg,
                                   std::uint64_t seed) {
    cfg.validate(m.num_items());
    check_weights(w, m);
    auto order = items_by_weight(w, cfg.target);
    const auto n = std::min(cfg.num_fillers, order.size());
    const auto fit = item_stats(m, UserScope::normal_only);
    Rng rng(seed);
    FakeUserProfile profile;
    profile.target = cfg.target;
    profile.target_rating = cfg.r_max;
    for (std::size_t k = 0; k < n; ++k) {
        const ItemId j = order[k];
        profile.fillers.emplace_back(j, sample_rating(rng, fit.mean[j], fit.stddev[j], cfg.r_max));
    }
    return profile;
}

std::vector<FakeUserProfile> run_attack(const RatingMatrix& m, const AttackConfig& cfg, const AttackProgress& progress) {
    cfg.validate(m.num_items());
    if (cfg.r_max != m.r_max())
        throw ValidationError("attack r_max " + std::to_string(cfg.r_max) + " differs from the matrix scale " +
                              std::to_string(m.r_max()));
    std::vector<FakeUserProfile> profiles;
    profiles.reserve(cfg.num_fake);
    WarmStartCache warm;
    RatingMatrix current = m;
    for (std::size_t j = 0; j < cfg.num_fake; ++j) {
        auto users = loss_users(current, cfg, j);
        auto result = optimize_weights(current, cfg, std::move(users), &warm);
        auto profile = synthesize_profile(current, result.weights, cfg, derive_seed(cfg.seed, {hash_name("synth"), j}));
        const FakeUserProfile one[] = {profile};
        current = append_fake_users(current, one);
        if (progress) progress(j, profile, result.trace);
        profiles.push_back(std::move(profile));
    }
    return profiles;
}

}  // namespace graphpoison

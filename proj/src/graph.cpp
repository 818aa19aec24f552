#include "graphpoison/graph.hpp"

#include <algorithm>

#include "graphpoison/errors.hpp"

namespace graphpoison {

namespace {

// Assembles the symmetric adjacency from per-user weighted rows.
// `extra`, when non-null, becomes user node `num_users`.
void assemble(const RatingMatrix& m, const WeightedEdges* extra, double cutoff,
                          std::size_t& num_users_out, std::size_t& num_items_out,
                          std::vector<std::size_t>& offsets, std::vector<NodeId>& neighbors,
                          std::vector<double>& weights) {
    const std::size_t nu = m.num_users() + (extra ? 1 : 0);
    const std::size_t ni = m.num_items();
    num_users_out = nu;
    num_items_out = ni;

    WeightedEdges kept;
    if (extra) {
        for (const auto& [item, w] : *extra) {
            if (item >= ni) throw ValidationError("extra user edge to item " + std::to_string(item) + " out of range");
            if (!(w >= 0.0)) throw NumericalError("negative or NaN edge weight on item " + std::to_string(item));
            if (w >= cutoff && w > 0.0) kept.emplace_back(item, w);
        }
        std::sort(kept.begin(), kept.end());
        if (std::adjacent_find(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
                return a.first == b.first;
            }) != kept.end())
            throw ValidationError("extra user lists an item twice");
    }

    const std::size_t n = nu + ni;
    offsets.assign(n + 1, 0);
    for (UserId u = 0; u < m.num_users(); ++u) offsets[u + 1] = m.user_ratings(u).size();
    if (extra) offsets[m.num_users() + 1] = kept.size();
    for (ItemId i = 0; i < ni; ++i) offsets[nu + i + 1] = m.item_ratings(i).size();
    for (const auto& [item, w] : kept) ++offsets[nu + item + 1];
    for (std::size_t x = 0; x < n; ++x) offsets[x + 1] += offsets[x];

    neighbors.resize(offsets[n]);
    weights.resize(offsets[n]);
    for (UserId u = 0; u < m.num_users(); ++u) {
        auto pos = offsets[u];
        for (const auto& e : m.user_ratings(u)) {
            neighbors[pos] = static_cast<NodeId>(nu + e.index);
            weights[pos++] = e.score;
        }
    }
    if (extra) {
        auto pos = offsets[m.num_users()];
        for (const auto& [item, w] : kept) {
            neighbors[pos] = static_cast<NodeId>(nu + item);
            weights[pos++] = w;
        }
    }
    std::vector<std::size_t> fill(ni);
    for (ItemId i = 0; i < ni; ++i) {
        auto pos = offsets[nu + i];
        for (const auto& e : m.item_ratings(i)) {
            neighbors[pos] = e.index;
            weights[pos++] = e.score;
        }
        fill[i] = pos;
    }
    // the extra user has the largest user id, so appending keeps item rows sorted
    for (const auto& [item, w] : kept) {
        neighbors[fill[item]] = static_cast<NodeId>(m.num_users());
        weights[fill[item]++] = w;
    }
}

}  // namespace

double TransitionMatrix::at(NodeId x, NodeId y) const {
    auto nb = neighbors(x);
    auto it = std::lower_bound(nb.begin(), nb.end(), y);
    if (it == nb.end() || *it != y) return 0.0;
    return forward_[offsets_[x] + static_cast<std::size_t>(it - nb.begin())];
}

namespace {

void normalize(std::size_t n, const std::vector<std::size_t>& offsets, const std::vector<NodeId>& neighbors,
               const std::vector<double>& weights, std::vector<double>& forward, std::vector<double>& backward,
               std::vector<double>& strength) {
    strength.assign(n, 0.0);
    for (std::size_t x = 0; x < n; ++x)
        for (auto k = offsets[x]; k < offsets[x + 1]; ++k) strength[x] += weights[k];
    forward.resize(weights.size());
    backward.resize(weights.size());
    for (std::size_t x = 0; x < n; ++x)
        for (auto k = offsets[x]; k < offsets[x + 1]; ++k) {
            forward[k] = weights[k] / strength[x];
            backward[k] = weights[k] / strength[neighbors[k]];
        }
}

}  // namespace

TransitionMatrix build_transition(const RatingMatrix& m) {
    TransitionMatrix q;
    assemble(m, nullptr, 0.0, q.num_users_, q.num_items_, q.offsets_, q.neighbors_, q.weights_);
    normalize(q.num_nodes(), q.offsets_, q.neighbors_, q.weights_, q.forward_, q.backward_, q.strength_);
    return q;
}

TransitionMatrix build_transition_with_user(const RatingMatrix& m, const WeightedEdges& extra, double cutoff) {
    TransitionMatrix q;
    assemble(m, &extra, cutoff, q.num_users_, q.num_items_, q.offsets_, q.neighbors_, q.weights_);
    normalize(q.num_nodes(), q.offsets_, q.neighbors_, q.weights_, q.forward_, q.backward_, q.strength_);
    return q;
}

}  // namespace graphpoison

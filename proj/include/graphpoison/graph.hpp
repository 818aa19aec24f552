#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "graphpoison/ratings.hpp"

namespace graphpoison {

using NodeId = std::uint32_t;

/// An extra user attached to the rating graph with real-valued edge weights.
using WeightedEdges = std::vector<std::pair<ItemId, double>>;

/// Row-normalized walk probabilities over the bipartite node set.
///
/// Users occupy nodes [0, num_users()), items [num_users(), num_nodes()).
/// Structure is symmetric, so one adjacency serves both orientations:
/// for the k-th neighbor entry of node x pointing at y,
/// `forward(k)` = Q[x][y] and `backward(k)` = Q[y][x].
class TransitionMatrix {
public:
    TransitionMatrix() = default;

    std::size_t num_users() const noexcept { return num_users_; }
    std::size_t num_items() const noexcept { return num_items_; }
    std::size_t num_nodes() const noexcept { return num_users_ + num_items_; }
    std::size_t num_entries() const noexcept { return neighbors_.size(); }

    NodeId user_node(UserId u) const noexcept { return u; }
    NodeId item_node(ItemId i) const noexcept { return static_cast<NodeId>(num_users_ + i); }
    bool is_item_node(NodeId x) const noexcept { return x >= num_users_; }

    std::span<const NodeId> neighbors(NodeId x) const {
        return {neighbors_.data() + offsets_[x], neighbors_.data() + offsets_[x + 1]};
    }
    /// Q[x][neighbors(x)[k]] for each k.
    std::span<const double> forward(NodeId x) const {
        return {forward_.data() + offsets_[x], forward_.data() + offsets_[x + 1]};
    }
    /// Q[neighbors(x)[k]][x] for each k.
    std::span<const double> backward(NodeId x) const {
        return {backward_.data() + offsets_[x], backward_.data() + offsets_[x + 1]};
    }
    /// Raw edge weights, aligned with neighbors(x).
    std::span<const double> weights(NodeId x) const {
        return {weights_.data() + offsets_[x], weights_.data() + offsets_[x + 1]};
    }
    /// Sum of edge weights at x (the row normalizer).
    double strength(NodeId x) const { return strength_[x]; }

    /// Q[x][y], 0 when (x, y) is not an edge.
    double at(NodeId x, NodeId y) const;

    friend TransitionMatrix build_transition(const RatingMatrix&);
    friend TransitionMatrix build_transition_with_user(const RatingMatrix&, const WeightedEdges&, double);

private:
    std::size_t num_users_ = 0;
    std::size_t num_items_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<NodeId> neighbors_;
    std::vector<double> weights_;
    std::vector<double> forward_;
    std::vector<double> backward_;
    std::vector<double> strength_;
};

/// Q[x][y] = r_xy / sum of x's edge weights, in both orientations.
TransitionMatrix build_transition(const RatingMatrix& m);

/// Same graph plus one extra user node (id m.num_users()) whose edges carry
/// the given weights. Edges with weight below `cutoff` are left out.
TransitionMatrix build_transition_with_user(const RatingMatrix& m, const WeightedEdges& extra, double cutoff);

}  // namespace graphpoison

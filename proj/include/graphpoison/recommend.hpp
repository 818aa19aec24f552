#pragma once

#include <functional>
#include <span>
#include <vector>

#include "graphpoison/graph.hpp"
#include "graphpoison/ratings.hpp"
#include "graphpoison/rwr.hpp"

namespace graphpoison {

struct RecommendationList {
    UserId user = 0;
    std::vector<ItemId> items;
    std::vector<double> scores;
};

/// True when item a ranks ahead of item b: larger score first, then smaller id.
inline bool ranks_before(double score_a, ItemId a, double score_b, ItemId b) {
    return score_a != score_b ? score_a > score_b : a < b;
}

/// Top-N items u has not rated, by descending score (ties: ascending id).
/// `item_scores` is indexed by item id.
RecommendationList top_n_by_score(const RatingMatrix& m, UserId u, std::span<const double> item_scores,
                                  std::size_t n);

/// Top-N by stationary probability; p must come from a transition matrix built on m.
RecommendationList top_n(const RatingMatrix& m, const StationaryDistribution& p, std::size_t n);

/// Zero-based position of t among the items u has not rated. t must be unrated by u.
std::size_t rank_of(const RatingMatrix& m, UserId u, std::span<const double> item_scores, ItemId t);

/// Hit ratios for several targets and list lengths: values[target][n_index].
struct HitRatioGrid {
    std::vector<ItemId> targets;
    std::vector<std::size_t> list_lengths;
    std::vector<std::vector<double>> values;
    /// Normal users eligible for each target (those who have not rated it).
    std::vector<std::size_t> eligible;

    double at(std::size_t target_index, std::size_t n_index) const { return values[target_index][n_index]; }
};

struct HitRatioOptions {
    double alpha = 0.3;
    SolverOptions solver{};
    std::size_t threads = 0;
};

/// Per-user item scores, indexed by item id.
using UserScorer = std::function<std::vector<double>(UserId)>;

/// Shared evaluator: scores each normal user once, then counts hits for every
/// (target, N). Fake users never count. Targets nobody is eligible for get 0.
HitRatioGrid hit_ratios_with(const RatingMatrix& m, std::span<const ItemId> targets,
                             std::span<const std::size_t> list_lengths, const UserScorer& scorer,
                             std::size_t threads = 0);

/// Graph-recommender hit ratios (random walk with restart per normal user).
/// Throws NumericalError if any solve fails to converge.
HitRatioGrid hit_ratios(const RatingMatrix& m, std::span<const ItemId> targets,
                        std::span<const std::size_t> list_lengths, const HitRatioOptions& opts = {});

double hit_ratio(const RatingMatrix& m, ItemId t, std::size_t n, double alpha);

}  // namespace graphpoison

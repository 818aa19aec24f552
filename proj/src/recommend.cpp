#include "graphpoison/recommend.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "graphpoison/errors.hpp"
#include "graphpoison/parallel.hpp"

namespace graphpoison {

RecommendationList top_n_by_score(const RatingMatrix& m, UserId u, std::span<const double> item_scores,
                                  std::size_t n) {
    if (n == 0) throw ValidationError("recommendation length must be >= 1");
    if (item_scores.size() != m.num_items()) throw ValidationError("item score vector has wrong length");
    std::vector<ItemId> candidates;
    candidates.reserve(m.num_items());
    auto rated = m.user_ratings(u);
    auto it = rated.begin();
    for (ItemId i = 0; i < m.num_items(); ++i) {
        while (it != rated.end() && it->index < i) ++it;
        if (it != rated.end() && it->index == i) continue;
        candidates.push_back(i);
    }
    const auto keep = std::min(n, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [&](ItemId a, ItemId b) { return ranks_before(item_scores[a], a, item_scores[b], b); });
    RecommendationList list;
    list.user = u;
    list.items.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep));
    for (auto i : list.items) list.scores.push_back(item_scores[i]);
    return list;
}

RecommendationList top_n(const RatingMatrix& m, const StationaryDistribution& p, std::size_t n) {
    if (p.probs.size() < m.num_items()) throw ValidationError("distribution does not cover the item nodes");
    // item nodes are the trailing num_items entries
    std::span<const double> items(p.probs.data() + (p.probs.size() - m.num_items()), m.num_items());
    return top_n_by_score(m, static_cast<UserId>(p.start), items, n);
}

std::size_t rank_of(const RatingMatrix& m, UserId u, std::span<const double> item_scores, ItemId t) {
    auto rated = m.user_ratings(u);
    auto it = rated.begin();
    std::size_t ahead = 0;
    const double st = item_scores[t];
    for (ItemId i = 0; i < m.num_items(); ++i) {
        while (it != rated.end() && it->index < i) ++it;
        if (it != rated.end() && it->index == i) continue;
        if (i != t && ranks_before(item_scores[i], i, st, t)) ++ahead;
    }
    return ahead;
}

namespace {

constexpr auto kIneligible = std::numeric_limits<std::size_t>::max();

// Scores for a group of users, one item-indexed vector per user.
using GroupScorer = std::function<std::vector<std::vector<double>>(std::span<const UserId>)>;

HitRatioGrid tally_hits(const RatingMatrix& m, std::span<const ItemId> targets,
                        std::span<const std::size_t> list_lengths, std::size_t group_size, const GroupScorer& scorer,
                        std::size_t threads) {
    for (auto t : targets)
        if (t >= m.num_items()) throw ValidationError("target item " + std::to_string(t) + " out of range");
    for (auto n : list_lengths)
        if (n == 0) throw ValidationError("recommendation length must be >= 1");

    // only users eligible for at least one target are scored
    std::vector<UserId> scored;
    for (UserId u = 0; u < m.num_normal_users(); ++u)
        for (auto t : targets)
            if (m.rating(u, t) == 0) {
                scored.push_back(u);
                break;
            }

    std::vector<std::vector<std::size_t>> ranks(scored.size());
    const auto groups = (scored.size() + group_size - 1) / group_size;
    parallel_for(
        groups,
        [&](std::size_t g) {
            const auto first = g * group_size;
            const auto count = std::min(group_size, scored.size() - first);
            std::span<const UserId> members(scored.data() + first, count);
            const auto scores = scorer(members);
            for (std::size_t j = 0; j < count; ++j) {
                const UserId u = members[j];
                auto& row = ranks[first + j];
                row.assign(targets.size(), kIneligible);
                for (std::size_t k = 0; k < targets.size(); ++k)
                    if (m.rating(u, targets[k]) == 0) row[k] = rank_of(m, u, scores[j], targets[k]);
            }
        },
        threads);

    HitRatioGrid grid;
    grid.targets.assign(targets.begin(), targets.end());
    grid.list_lengths.assign(list_lengths.begin(), list_lengths.end());
    grid.values.assign(targets.size(), std::vector<double>(list_lengths.size(), 0.0));
    grid.eligible.assign(targets.size(), 0);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        std::vector<std::size_t> hits(list_lengths.size(), 0);
        for (const auto& row : ranks) {
            const auto r = row[k];
            if (r == kIneligible) continue;
            ++grid.eligible[k];
            for (std::size_t j = 0; j < list_lengths.size(); ++j)
                if (r < list_lengths[j]) ++hits[j];
        }
        for (std::size_t j = 0; j < list_lengths.size(); ++j)
            grid.values[k][j] =
                grid.eligible[k] ? static_cast<double>(hits[j]) / static_cast<double>(grid.eligible[k]) : 0.0;
    }
    return grid;
}

}  // namespace

HitRatioGrid hit_ratios_with(const RatingMatrix& m, std::span<const ItemId> targets,
                             std::span<const std::size_t> list_lengths, const UserScorer& scorer,
                             std::size_t threads) {
    GroupScorer one = [&](std::span<const UserId> users) {
        std::vector<std::vector<double>> out;
        out.push_back(scorer(users[0]));
        return out;
    };
    return tally_hits(m, targets, list_lengths, 1, one, threads);
}

HitRatioGrid hit_ratios(const RatingMatrix& m, std::span<const ItemId> targets,
                        std::span<const std::size_t> list_lengths, const HitRatioOptions& opts) {
    const auto q = build_transition(m);
    GroupScorer walks = [&](std::span<const UserId> users) {
        std::vector<NodeId> starts(users.begin(), users.end());
        auto dists = solve_rwr_many(q, starts, opts.alpha, opts.solver);
        std::vector<std::vector<double>> out;
        out.reserve(dists.size());
        for (std::size_t j = 0; j < dists.size(); ++j) {
            if (!dists[j].converged)
                throw NumericalError("random walk from user " + m.user_label(users[j]) + " did not converge in " +
                                     std::to_string(dists[j].iterations) + " sweeps");
            out.emplace_back(dists[j].probs.begin() + static_cast<std::ptrdiff_t>(q.num_users()),
                             dists[j].probs.end());
        }
        return out;
    };
    return tally_hits(m, targets, list_lengths, kBlockColumns, walks, opts.threads);
}

double hit_ratio(const RatingMatrix& m, ItemId t, std::size_t n, double alpha) {
    const ItemId targets[] = {t};
    const std::size_t lengths[] = {n};
    HitRatioOptions opts;
    opts.alpha = alpha;
    return hit_ratios(m, targets, lengths, opts).at(0, 0);
}

}  // namespace graphpoison

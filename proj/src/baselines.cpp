#include "graphpoison/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <string_view>

#include "graphpoison/errors.hpp"
#include "graphpoison/rng.hpp"

namespace graphpoison {

namespace {

void check_budget(const RatingMatrix& m, ItemId t, std::size_t n) {
    if (t >= m.num_items()) throw ValidationError("target item " + std::to_string(t) + " out of range");
    if (n >= m.num_items())
        throw ValidationError("filler budget " + std::to_string(n) + " needs fewer than " +
                              std::to_string(m.num_items()) + " items");
}

std::vector<ItemId> items_except(const RatingMatrix& m, ItemId t) {
    std::vector<ItemId> out;
    out.reserve(m.num_items());
    for (ItemId i = 0; i < m.num_items(); ++i)
        if (i != t) out.push_back(i);
    return out;
}

Rng substream(std::uint64_t seed, std::string_view attack, std::size_t k) {
    return Rng(derive_seed(seed, {hash_name(attack), k}));
}

FakeUserProfile make_profile(ItemId t, int r_max) {
    FakeUserProfile p;
    p.target = t;
    p.target_rating = r_max;
    return p;
}

// Ranks ids by descending key, ties by ascending id.
std::vector<ItemId> rank_by(const std::vector<std::size_t>& key) {
    std::vector<ItemId> order(key.size());
    std::iota(order.begin(), order.end(), ItemId{0});
    std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) { return key[a] > key[b]; });
    return order;
}

}  // namespace

std::vector<FakeUserProfile> random_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                           std::uint64_t seed) {
    check_budget(m, t, n);
    const int r_max = m.r_max();
    const auto global = global_stats(m);
    const auto pool = items_except(m, t);
    std::vector<FakeUserProfile> out;
    for (std::size_t k = 0; k < count; ++k) {
        auto rng = substream(seed, "random", k);
        auto p = make_profile(t, r_max);
        for (auto j : sample_without_replacement(rng, pool, n))
            p.fillers.emplace_back(j, sample_rating(rng, global.mean, global.stddev, r_max));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<FakeUserProfile> average_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                            std::uint64_t seed) {
    check_budget(m, t, n);
    const int r_max = m.r_max();
    const auto fit = item_stats(m);
    const auto pool = items_except(m, t);
    std::vector<FakeUserProfile> out;
    for (std::size_t k = 0; k < count; ++k) {
        auto rng = substream(seed, "average", k);
        auto p = make_profile(t, r_max);
        for (auto j : sample_without_replacement(rng, pool, n))
            p.fillers.emplace_back(j, sample_rating(rng, fit.mean[j], fit.stddev[j], r_max));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<FakeUserProfile> bandwagon_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                              std::uint64_t seed) {
    check_budget(m, t, n);
    if (n == 0) throw ValidationError("bandwagon attack needs at least one filler");
    const int r_max = m.r_max();
    const auto global = global_stats(m);
    const auto fit = item_stats(m);
    std::vector<ItemId> popular;
    for (ItemId i = 0; i < m.num_items(); ++i)
        if (i != t && fit.count[i] > 0 && fit.mean[i] >= r_max) popular.push_back(i);
    const auto wanted = static_cast<std::size_t>(std::lround(static_cast<double>(n) * 0.1));
    const auto all = items_except(m, t);

    std::vector<FakeUserProfile> out;
    for (std::size_t k = 0; k < count; ++k) {
        auto rng = substream(seed, "bandwagon", k);
        auto chosen = sample_without_replacement(rng, popular, wanted);
        std::vector<ItemId> rest;
        rest.reserve(all.size());
        for (auto i : all)
            if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) rest.push_back(i);
        for (auto i : sample_without_replacement(rng, std::move(rest), n - chosen.size())) chosen.push_back(i);
        auto p = make_profile(t, r_max);
        for (auto j : chosen) p.fillers.emplace_back(j, sample_rating(rng, global.mean, global.stddev, r_max));
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ItemId> corated_with(const RatingMatrix& m, ItemId t) {
    if (t >= m.num_items()) throw ValidationError("target item " + std::to_string(t) + " out of range");
    std::vector<std::size_t> count(m.num_items(), 0);
    for (const auto& r : m.item_ratings(t))
        for (const auto& e : m.user_ratings(r.index)) ++count[e.index];
    count[t] = 0;
    auto order = rank_by(count);
    std::erase_if(order, [&](ItemId i) { return count[i] == 0; });
    return order;
}

std::vector<ItemId> most_corated(const RatingMatrix& m) {
    std::vector<std::size_t> total(m.num_items(), 0);
    for (UserId u = 0; u < m.num_users(); ++u) {
        const auto row = m.user_ratings(u);
        for (const auto& e : row) total[e.index] += row.size() - 1;
    }
    return rank_by(total);
}

std::vector<FakeUserProfile> covisitation_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                                 std::uint64_t seed) {
    check_budget(m, t, n);
    const int r_max = m.r_max();
    const auto fit = item_stats(m);
    auto fillers = corated_with(m, t);
    if (fillers.size() > n) fillers.resize(n);
    for (auto i : most_corated(m)) {
        if (fillers.size() == n) break;
        if (i != t && std::find(fillers.begin(), fillers.end(), i) == fillers.end()) fillers.push_back(i);
    }
    std::vector<FakeUserProfile> out;
    for (std::size_t k = 0; k < count; ++k) {
        auto rng = substream(seed, "covisitation", k);
        auto p = make_profile(t, r_max);
        for (auto j : fillers) p.fillers.emplace_back(j, sample_rating(rng, fit.mean[j], fit.stddev[j], r_max));
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace graphpoison

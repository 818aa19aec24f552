#pragma once

#include <cstdint>
#include <vector>

#include "graphpoison/profile.hpp"
#include "graphpoison/ratings.hpp"

namespace graphpoison {

// Each baseline returns `count` profiles promoting t with n fillers. Fake
// user k draws from its own substream of `seed`, so profile k does not depend
// on how many others are generated. Ratings are discretized into [1, r_max]
// of m; the target always gets r_max.

/// Uniform fillers; ratings from the global rating distribution.
std::vector<FakeUserProfile> random_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                           std::uint64_t seed);

/// Uniform fillers; each rated from its item's rating distribution.
std::vector<FakeUserProfile> average_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                            std::uint64_t seed);

/// round(n / 10) fillers drawn from items whose mean rating is r_max, the rest
/// uniform; ratings from the global distribution. If the popular pool is too
/// small all of it is used and the remainder is uniform.
std::vector<FakeUserProfile> bandwagon_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                              std::uint64_t seed);

/// Items most often co-rated with t (ties: lower id), topped up with the
/// items co-rated most overall; ratings from each item's distribution.
std::vector<FakeUserProfile> covisitation_attack(const RatingMatrix& m, ItemId t, std::size_t count, std::size_t n,
                                                 std::uint64_t seed);

/// Items ranked by how many users rated both them and t, descending, ties by
/// id. Items never co-rated with t are left out.
std::vector<ItemId> corated_with(const RatingMatrix& m, ItemId t);

/// Every item ranked by its total co-rating count sum_u (|I_u| - 1), descending, ties by id.
std::vector<ItemId> most_corated(const RatingMatrix& m);

}  // namespace graphpoison

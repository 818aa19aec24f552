#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "graphpoison/ratings.hpp"

namespace graphpoison {

/// A single injected user: the target rated at target_rating plus up to n filler items.
struct FakeUserProfile {
    ItemId target = 0;
    int target_rating = kDefaultRatingMax;
    std::vector<std::pair<ItemId, int>> fillers;

    std::size_t num_rated() const noexcept { return fillers.size() + 1; }

    friend bool operator==(const FakeUserProfile&, const FakeUserProfile&) = default;
};

/// Throws ValidationError unless ids are < num_items, ratings in [1, r_max],
/// the target is not a filler, and filler ids are distinct.
void validate_profile(const FakeUserProfile& p, std::size_t num_items, int r_max);

/// Triple lines `<profile> <item> <rating> fake`; the target line comes first per profile.
void save_profiles(std::span<const FakeUserProfile> profiles, int r_max, const std::filesystem::path& path);
std::vector<FakeUserProfile> load_profiles(const std::filesystem::path& path);

}  // namespace graphpoison

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace graphpoison {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;

inline constexpr int kDefaultRatingMax = 5;

/// One stored rating as seen from a user (index = item) or from an item (index = user).
struct RatingEntry {
    std::uint32_t index;
    std::int32_t score;

    friend bool operator==(const RatingEntry&, const RatingEntry&) = default;
};

struct RatingTriple {
    UserId user;
    ItemId item;
    std::int32_t score;

    friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

struct FakeUserProfile;

/// Immutable sparse user-item rating matrix. Absent entries mean "not rated".
///
/// Users [0, num_normal_users()) are normal; users appended by
/// append_fake_users() occupy [num_normal_users(), num_users()).
class RatingMatrix {
public:
    RatingMatrix() = default;

    /// Builds from dense-id triples. Throws ValidationError on duplicates,
    /// out-of-range ids or scores outside [1, r_max].
    static RatingMatrix from_triples(std::size_t num_users, std::size_t num_items,
                                     std::vector<RatingTriple> triples, int r_max,
                                     std::optional<std::size_t> num_normal_users = std::nullopt,
                                     std::vector<std::string> user_labels = {},
                                     std::vector<std::string> item_labels = {});

    std::size_t num_users() const noexcept { return user_offsets_.empty() ? 0 : user_offsets_.size() - 1; }
    std::size_t num_items() const noexcept { return item_offsets_.empty() ? 0 : item_offsets_.size() - 1; }
    std::size_t num_ratings() const noexcept { return user_entries_.size(); }
    std::size_t num_normal_users() const noexcept { return num_normal_; }
    std::size_t num_fake_users() const noexcept { return num_users() - num_normal_; }
    int r_max() const noexcept { return r_max_; }

    bool is_fake(UserId u) const noexcept { return u >= num_normal_; }

    /// Ratings of user u, sorted by item id.
    std::span<const RatingEntry> user_ratings(UserId u) const;
    /// Ratings of item i, sorted by user id.
    std::span<const RatingEntry> item_ratings(ItemId i) const;

    /// Score of (u, i), 0 when unrated.
    int rating(UserId u, ItemId i) const;

    const std::string& user_label(UserId u) const { return user_labels_.at(u); }
    const std::string& item_label(ItemId i) const { return item_labels_.at(i); }
    const std::vector<std::string>& user_labels() const noexcept { return user_labels_; }
    const std::vector<std::string>& item_labels() const noexcept { return item_labels_; }

    /// All ratings sorted by (user, item).
    std::vector<RatingTriple> triples() const;

    friend bool operator==(const RatingMatrix&, const RatingMatrix&) = default;

private:
    int r_max_ = kDefaultRatingMax;
    std::size_t num_normal_ = 0;
    std::vector<std::size_t> user_offsets_;
    std::vector<RatingEntry> user_entries_;
    std::vector<std::size_t> item_offsets_;
    std::vector<RatingEntry> item_entries_;
    std::vector<std::string> user_labels_;
    std::vector<std::string> item_labels_;
};

/// Assigns dense ids to raw identifiers in first-seen order while collecting ratings.
class RatingMatrixBuilder {
public:
    /// Records one rating; `where` is used in error messages for duplicates.
    void add(const std::string& user, const std::string& item, int score,
             const std::string& where = {});

    /// Validates scores against r_max (detected as the maximum observed score
    /// when not given) and builds the matrix.
    RatingMatrix build(std::optional<int> r_max = std::nullopt) &&;

private:
    std::unordered_map<std::string, UserId> user_ids_;
    std::unordered_map<std::string, ItemId> item_ids_;
    std::vector<std::string> user_labels_;
    std::vector<std::string> item_labels_;
    std::vector<RatingTriple> triples_;
    std::vector<std::string> origins_;
};

/// Column layout for delimited rating files.
struct CsvSchema {
    char delimiter = ',';
    bool has_header = true;
    /// Header names, used when has_header is set and the matching index is empty.
    std::string user_column = "user";
    std::string item_column = "item";
    std::string rating_column = "rating";
    /// Zero-based positions; take precedence over names.
    std::optional<std::size_t> user_index;
    std::optional<std::size_t> item_index;
    std::optional<std::size_t> rating_index;
};

struct DatasetStats {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::size_t num_ratings = 0;
    double sparsity = 0.0;
};

struct ItemStats {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::size_t> count;
};

/// Which users contribute to rating statistics.
enum class UserScope { all, normal_only };

/// Reads MovieLens `user<TAB>item<TAB>rating<TAB>timestamp` lines.
RatingMatrix load_movielens(const std::filesystem::path& path, std::optional<int> r_max = std::nullopt);

RatingMatrix load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                      std::optional<int> r_max = std::nullopt);

/// Snapshot format: one header line then `user item rating` triples sorted by (user, item).
void save_snapshot(const RatingMatrix& m, const std::filesystem::path& path);
RatingMatrix load_snapshot(const std::filesystem::path& path);

DatasetStats stats(const RatingMatrix& m);

/// Per-item population mean/stddev. Items without ratings in scope get the
/// global mean and zero stddev.
ItemStats item_stats(const RatingMatrix& m, UserScope scope = UserScope::all);

struct GlobalStats {
    double mean = 0.0;
    double stddev = 0.0;
};

GlobalStats global_stats(const RatingMatrix& m, UserScope scope = UserScope::all);

/// Normal users who have not rated t, ascending.
std::vector<UserId> unrated_users(const RatingMatrix& m, ItemId t);

/// Returns a copy with the profiles appended as fake users after all existing users.
RatingMatrix append_fake_users(const RatingMatrix& m, std::span<const FakeUserProfile> profiles);

/// Returns a copy without the given users. Item ids are preserved; surviving
/// normal users stay ahead of surviving fake users.
RatingMatrix remove_users(const RatingMatrix& m, std::span<const UserId> users);

/// floor(fraction * normal users).
std::size_t fake_user_count(const RatingMatrix& m, double attack_size);

}  // namespace graphpoison

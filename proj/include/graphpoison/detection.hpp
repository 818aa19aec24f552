#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphpoison/profile.hpp"
#include "graphpoison/ratings.hpp"
#include "graphpoison/recommend.hpp"

namespace graphpoison {

inline constexpr std::size_t kNumFeatures = 5;
using FeatureRow = std::array<double, kNumFeatures>;

struct UserFeatures {
    double rdma = 0.0;
    double wda = 0.0;
    double wdma = 0.0;
    double mean_var = 0.0;
    double fmtd = 0.0;

    FeatureRow row() const { return {rdma, wda, wdma, mean_var, fmtd}; }
};

/// Rating-deviation features of u, with item means and counts taken over all
/// users of m. FMTD compares ratings equal to r_max against the rest and is 0
/// if either group is empty. Throws ValidationError if u has no ratings.
UserFeatures features(const RatingMatrix& m, UserId u);

/// Same for many users, sharing one pass over the item statistics.
std::vector<UserFeatures> features(const RatingMatrix& m, std::span<const UserId> users);

/// K-nearest-neighbour fake-user classifier on z-scored features.
struct DetectorModel {
    std::vector<FeatureRow> points;  ///< standardized training rows
    std::vector<bool> fake;          ///< label per training row
    std::size_t k = 1;
    FeatureRow mean{};
    FeatureRow scale{};
    double cv_accuracy = 0.0;
    /// One message per feature that had zero variance in training.
    std::vector<std::string> warnings;

    FeatureRow standardize(const FeatureRow& x) const;
    bool predict_fake(const FeatureRow& x) const;
};

struct DetectorOptions {
    std::vector<std::size_t> k_grid{1, 3, 5, 7, 9, 11, 13, 15, 17, 19};
    std::size_t folds = 5;
    std::uint64_t seed = 0;
};

/// Fits standardization on the given rows and picks K by cross-validated
/// accuracy (ties: smaller K). Each fold is standardized on its own training part.
DetectorModel train_detector(std::span<const UserFeatures> normals, std::span<const UserFeatures> fakes,
                             const DetectorOptions& opts = {});

/// Samples `normal_count` normal users of m, adds the training fakes to m and
/// trains on the features of both groups in that augmented matrix.
DetectorModel train_detector(const RatingMatrix& m, std::span<const FakeUserProfile> training_fakes,
                             std::size_t normal_count, const DetectorOptions& opts = {});

struct DetectionReport {
    std::vector<UserId> users;
    std::vector<bool> predicted_fake;
    std::vector<bool> actually_fake;
    /// Absent when the evaluated set has no normal (fpr) or no fake (fnr) users.
    std::optional<double> fpr;
    std::optional<double> fnr;

    std::vector<UserId> flagged() const;
};

/// Classifies `users` of m (all users when empty); ground truth is m.is_fake().
DetectionReport detect(const DetectorModel& model, const RatingMatrix& m, std::span<const UserId> users = {});

/// Hit ratios after removing every flagged user from m.
HitRatioGrid filtered_hit_ratios(const RatingMatrix& m, const DetectionReport& report,
                                 std::span<const ItemId> targets, std::span<const std::size_t> list_lengths,
                                 const HitRatioOptions& opts = {});

double filtered_hit_ratio(const RatingMatrix& m, const DetectionReport& report, ItemId t, std::size_t n,
                          double alpha);

/// Per-user predictions plus the summary rates; format picked by extension (.csv or .json).
void save_detection_report(const DetectionReport& report, const RatingMatrix& m, const std::filesystem::path& path);

}  // namespace graphpoison

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphpoison/ratings.hpp"
#include "graphpoison/recommend.hpp"

namespace graphpoison {

struct MfOptions {
    std::size_t dims = 16;
    std::size_t epochs = 30;
    double learning_rate = 0.01;
    double regularization = 0.05;
    /// Standard deviation of the initial user factors; item factors start at 0.
    double init_scale = 0.1;
    std::uint64_t seed = 0;
};

/// Biased matrix factorization: r_ui ~ mu + b_u + b_i + <p_u, q_i>.
class MFModel {
public:
    MFModel(std::size_t num_users, std::size_t num_items, std::size_t dims, double global_mean);

    std::size_t num_users() const noexcept { return user_bias_.size(); }
    std::size_t num_items() const noexcept { return item_bias_.size(); }
    std::size_t dims() const noexcept { return dims_; }
    double global_mean() const noexcept { return mu_; }

    double predict(UserId u, ItemId i) const;
    /// Predictions for every item, indexed by item id.
    std::vector<double> predict_all(UserId u) const;

    /// Mean squared error over the stored ratings of m.
    double mse(const RatingMatrix& m) const;

    /// Per-epoch training mean squared error recorded by mf_train.
    const std::vector<double>& epoch_mse() const noexcept { return epoch_mse_; }

private:
    friend MFModel mf_train(const RatingMatrix&, const MfOptions&);

    std::size_t dims_;
    double mu_;
    std::vector<double> user_bias_, item_bias_;
    std::vector<double> user_factors_, item_factors_;  // row-major, dims_ per row
    std::vector<double> epoch_mse_;
};

/// Stochastic gradient descent over the ratings, visited in a seeded random
/// order each epoch. Throws NumericalError naming the epoch if the loss stops
/// being finite.
MFModel mf_train(const RatingMatrix& m, const MfOptions& opts = {});

/// Hit ratios with items ranked by predicted rating instead of walk probability.
HitRatioGrid mf_hit_ratios(const MFModel& model, const RatingMatrix& m, std::span<const ItemId> targets,
                           std::span<const std::size_t> list_lengths, std::size_t threads = 0);

double mf_hit_ratio(const MFModel& model, const RatingMatrix& m, ItemId t, std::size_t n);

}  // namespace graphpoison

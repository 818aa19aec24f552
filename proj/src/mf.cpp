#include "graphpoison/mf.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "graphpoison/errors.hpp"
#include "graphpoison/rng.hpp"

namespace graphpoison {

MFModel::MFModel(std::size_t num_users, std::size_t num_items, std::size_t dims, double global_mean)
    : dims_(dims),
      mu_(global_mean),
      user_bias_(num_users, 0.0),
      item_bias_(num_items, 0.0),
      user_factors_(num_users * dims, 0.0),
      item_factors_(num_items * dims, 0.0) {}

double MFModel::predict(UserId u, ItemId i) const {
    if (u >= num_users() || i >= num_items()) throw ValidationError("prediction index out of range");
    const double* p = user_factors_.data() + std::size_t{u} * dims_;
    const double* q = item_factors_.data() + std::size_t{i} * dims_;
    return mu_ + user_bias_[u] + item_bias_[i] + std::inner_product(p, p + dims_, q, 0.0);
}

std::vector<double> MFModel::predict_all(UserId u) const {
    std::vector<double> out(num_items());
    for (ItemId i = 0; i < num_items(); ++i) out[i] = predict(u, i);
    return out;
}

double MFModel::mse(const RatingMatrix& m) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (UserId u = 0; u < m.num_users(); ++u)
        for (const auto& e : m.user_ratings(u)) {
            const double err = e.score - predict(u, e.index);
            sum += err * err;
            ++count;
        }
    return count ? sum / static_cast<double>(count) : 0.0;
}

MFModel mf_train(const RatingMatrix& m, const MfOptions& opts) {
    if (opts.dims == 0) throw ValidationError("matrix factorization needs at least one dimension");
    if (!(opts.learning_rate > 0.0) || !(opts.regularization >= 0.0))
        throw ValidationError("learning rate must be > 0 and regularization >= 0");
    auto triples = m.triples();
    const double mean = triples.empty() ? 0.0 : global_stats(m).mean;
    MFModel model(m.num_users(), m.num_items(), opts.dims, mean);
    const auto d = opts.dims;

    Rng init(derive_seed(opts.seed, {hash_name("mf-init")}));
    std::normal_distribution<double> noise(0.0, opts.init_scale);
    for (auto& x : model.user_factors_) x = opts.init_scale > 0.0 ? noise(init) : 0.0;

    const double lr = opts.learning_rate;
    const double reg = opts.regularization;
    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        Rng order(derive_seed(opts.seed, {hash_name("mf-epoch"), epoch}));
        std::shuffle(triples.begin(), triples.end(), order);
        for (const auto& r : triples) {
            double* p = model.user_factors_.data() + std::size_t{r.user} * d;
            double* q = model.item_factors_.data() + std::size_t{r.item} * d;
            auto& bu = model.user_bias_[r.user];
            auto& bi = model.item_bias_[r.item];
            const double err = r.score - (model.mu_ + bu + bi + std::inner_product(p, p + d, q, 0.0));
            bu += lr * (err - reg * bu);
            bi += lr * (err - reg * bi);
            for (std::size_t k = 0; k < d; ++k) {
                const double pk = p[k];
                p[k] += lr * (err * q[k] - reg * pk);
                q[k] += lr * (err * pk - reg * q[k]);
            }
        }
        const double loss = model.mse(m);
        if (!std::isfinite(loss))
            throw NumericalError("matrix factorization diverged in epoch " + std::to_string(epoch + 1));
        model.epoch_mse_.push_back(loss);
    }
    return model;
}

HitRatioGrid mf_hit_ratios(const MFModel& model, const RatingMatrix& m, std::span<const ItemId> targets,
                           std::span<const std::size_t> list_lengths, std::size_t threads) {
    if (model.num_users() != m.num_users() || model.num_items() != m.num_items())
        throw ValidationError("model shape does not match the rating matrix");
    return hit_ratios_with(
        m, targets, list_lengths, [&](UserId u) { return model.predict_all(u); }, threads);
}

double mf_hit_ratio(const MFModel& model, const RatingMatrix& m, ItemId t, std::size_t n) {
    const ItemId targets[] = {t};
    const std::size_t lengths[] = {n};
    return mf_hit_ratios(model, m, targets, lengths).at(0, 0);
}

}  // namespace graphpoison

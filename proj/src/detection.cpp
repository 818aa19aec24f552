#include "graphpoison/detection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "graphpoison/errors.hpp"
#include "graphpoison/rng.hpp"

namespace graphpoison {

namespace {

constexpr const char* kFeatureNames[kNumFeatures] = {"rdma", "wda", "wdma", "mean_var", "fmtd"};

UserFeatures features_with(const RatingMatrix& m, UserId u, const ItemStats& st) {
    if (u >= m.num_users()) throw ValidationError("user out of range");
    const auto row = m.user_ratings(u);
    if (row.empty()) throw ValidationError("user " + m.user_label(u) + " has no ratings");
    UserFeatures f;
    double top_sum = 0.0, rest_sum = 0.0;
    std::size_t top = 0, rest = 0;
    for (const auto& e : row) {
        const double dev = e.score - st.mean[e.index];
        const double o = static_cast<double>(st.count[e.index]);
        f.wda += std::abs(dev) / o;
        f.wdma += std::abs(dev) / (o * o);
        f.mean_var += dev * dev;
        if (e.score == m.r_max()) {
            top_sum += e.score;
            ++top;
        } else {
            rest_sum += e.score;
            ++rest;
        }
    }
    const double n = static_cast<double>(row.size());
    f.rdma = f.wda / n;
    f.wdma /= n;
    f.mean_var /= n;
    if (top && rest) f.fmtd = std::abs(top_sum / static_cast<double>(top) - rest_sum / static_cast<double>(rest));
    return f;
}

struct Scaler {
    FeatureRow mean{};
    FeatureRow scale{};
    std::vector<std::size_t> degenerate;
};

Scaler fit_scaler(std::span<const FeatureRow> rows) {
    Scaler s;
    const double n = static_cast<double>(rows.size());
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
        double mu = 0.0;
        for (const auto& r : rows) mu += r[j];
        mu /= n;
        double var = 0.0;
        for (const auto& r : rows) var += (r[j] - mu) * (r[j] - mu);
        const double sd = std::sqrt(var / n);
        s.mean[j] = mu;
        if (sd > 0.0) {
            s.scale[j] = sd;
        } else {
            s.scale[j] = 1.0;
            s.degenerate.push_back(j);
        }
    }
    return s;
}

FeatureRow scaled(const Scaler& s, const FeatureRow& x) {
    FeatureRow z;
    for (std::size_t j = 0; j < kNumFeatures; ++j) z[j] = (x[j] - s.mean[j]) / s.scale[j];
    return z;
}

// Majority vote of the k nearest points; equal distances go to the lower index.
bool knn_vote(std::span<const FeatureRow> points, const std::vector<bool>& fake, std::size_t k, const FeatureRow& z) {
    std::vector<std::pair<double, std::size_t>> dist(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < kNumFeatures; ++j) d += (points[i][j] - z[j]) * (points[i][j] - z[j]);
        dist[i] = {d, i};
    }
    k = std::min(k, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::size_t votes = 0;
    for (std::size_t i = 0; i < k; ++i) votes += fake[dist[i].second];
    return 2 * votes > k;
}

}  // namespace

UserFeatures features(const RatingMatrix& m, UserId u) {
    return features_with(m, u, item_stats(m));
}

std::vector<UserFeatures> features(const RatingMatrix& m, std::span<const UserId> users) {
    const auto st = item_stats(m);
    std::vector<UserFeatures> out;
    out.reserve(users.size());
    for (auto u : users) out.push_back(features_with(m, u, st));
    return out;
}

FeatureRow DetectorModel::standardize(const FeatureRow& x) const {
    FeatureRow z;
    for (std::size_t j = 0; j < kNumFeatures; ++j) z[j] = (x[j] - mean[j]) / scale[j];
    return z;
}

bool DetectorModel::predict_fake(const FeatureRow& x) const {
    return knn_vote(points, fake, k, standardize(x));
}

DetectorModel train_detector(std::span<const UserFeatures> normals, std::span<const UserFeatures> fakes,
                             const DetectorOptions& opts) {
    if (normals.empty() || fakes.empty()) throw ValidationError("detector training needs both normal and fake rows");
    if (opts.k_grid.empty() || opts.folds < 2) throw ValidationError("detector needs a K grid and at least 2 folds");
    for (auto k : opts.k_grid)
        if (k % 2 == 0) throw ValidationError("K must be odd, got " + std::to_string(k));

    std::vector<FeatureRow> rows;
    std::vector<bool> labels;
    for (const auto& f : normals) {
        rows.push_back(f.row());
        labels.push_back(false);
    }
    for (const auto& f : fakes) {
        rows.push_back(f.row());
        labels.push_back(true);
    }
    const auto n = rows.size();
    if (n < opts.folds) throw ValidationError("fewer training rows than folds");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(opts.seed, {hash_name("detector-folds")}));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % opts.folds;

    std::vector<std::size_t> correct(opts.k_grid.size(), 0);
    for (std::size_t f = 0; f < opts.folds; ++f) {
        std::vector<FeatureRow> train;
        std::vector<bool> train_labels;
        for (std::size_t i = 0; i < n; ++i)
            if (fold[i] != f) {
                train.push_back(rows[i]);
                train_labels.push_back(labels[i]);
            }
        const auto scaler = fit_scaler(train);
        for (auto& r : train) r = scaled(scaler, r);
        for (std::size_t i = 0; i < n; ++i) {
            if (fold[i] != f) continue;
            const auto z = scaled(scaler, rows[i]);
            for (std::size_t g = 0; g < opts.k_grid.size(); ++g)
                if (knn_vote(train, train_labels, opts.k_grid[g], z) == labels[i]) ++correct[g];
        }
    }

    DetectorModel model;
    std::size_t best = 0;
    for (std::size_t g = 1; g < opts.k_grid.size(); ++g)
        if (correct[g] > correct[best] || (correct[g] == correct[best] && opts.k_grid[g] < opts.k_grid[best]))
            best = g;
    model.k = opts.k_grid[best];
    model.cv_accuracy = static_cast<double>(correct[best]) / static_cast<double>(n);

    const auto scaler = fit_scaler(rows);
    model.mean = scaler.mean;
    model.scale = scaler.scale;
    for (auto j : scaler.degenerate)
        model.warnings.push_back(std::string("feature ") + kFeatureNames[j] +
                                 " has zero variance in training; left unscaled");
    for (const auto& r : rows) model.points.push_back(scaled(scaler, r));
    model.fake = std::move(labels);
    return model;
}

DetectorModel train_detector(const RatingMatrix& m, std::span<const FakeUserProfile> training_fakes,
                             std::size_t normal_count, const DetectorOptions& opts) {
    std::vector<UserId> pool(m.num_normal_users());
    std::iota(pool.begin(), pool.end(), UserId{0});
    if (normal_count > pool.size())
        throw ValidationError("asked for " + std::to_string(normal_count) + " normal training users, only " +
                              std::to_string(pool.size()) + " exist");
    Rng rng(derive_seed(opts.seed, {hash_name("detector-normals")}));
    auto normals = sample_without_replacement(rng, std::move(pool), normal_count);
    std::sort(normals.begin(), normals.end());

    const auto augmented = append_fake_users(m, training_fakes);
    std::vector<UserId> fakes(training_fakes.size());
    std::iota(fakes.begin(), fakes.end(), static_cast<UserId>(m.num_users()));
    const auto fn = features(augmented, normals);
    const auto ff = features(augmented, fakes);
    return train_detector(fn, ff, opts);
}

std::vector<UserId> DetectionReport::flagged() const {
    std::vector<UserId> out;
    for (std::size_t i = 0; i < users.size(); ++i)
        if (predicted_fake[i]) out.push_back(users[i]);
    return out;
}

DetectionReport detect(const DetectorModel& model, const RatingMatrix& m, std::span<const UserId> users) {
    DetectionReport r;
    if (users.empty()) {
        r.users.resize(m.num_users());
        std::iota(r.users.begin(), r.users.end(), UserId{0});
    } else {
        r.users.assign(users.begin(), users.end());
    }
    const auto fs = features(m, r.users);
    std::size_t normals = 0, fakes = 0, false_pos = 0, false_neg = 0;
    for (std::size_t i = 0; i < r.users.size(); ++i) {
        const bool predicted = model.predict_fake(fs[i].row());
        const bool truth = m.is_fake(r.users[i]);
        r.predicted_fake.push_back(predicted);
        r.actually_fake.push_back(truth);
        if (truth) {
            ++fakes;
            false_neg += !predicted;
        } else {
            ++normals;
            false_pos += predicted;
        }
    }
    if (normals) r.fpr = static_cast<double>(false_pos) / static_cast<double>(normals);
    if (fakes) r.fnr = static_cast<double>(false_neg) / static_cast<double>(fakes);
    return r;
}

HitRatioGrid filtered_hit_ratios(const RatingMatrix& m, const DetectionReport& report,
                                 std::span<const ItemId> targets, std::span<const std::size_t> list_lengths,
                                 const HitRatioOptions& opts) {
    const auto removed = report.flagged();
    return hit_ratios(remove_users(m, removed), targets, list_lengths, opts);
}

double filtered_hit_ratio(const RatingMatrix& m, const DetectionReport& report, ItemId t, std::size_t n,
                          double alpha) {
    const ItemId targets[] = {t};
    const std::size_t lengths[] = {n};
    HitRatioOptions opts;
    opts.alpha = alpha;
    return filtered_hit_ratios(m, report, targets, lengths, opts).at(0, 0);
}

void save_detection_report(const DetectionReport& report, const RatingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    if (path.extension() == ".json") {
        nlohmann::json j;
        j["fpr"] = report.fpr ? nlohmann::json(*report.fpr) : nlohmann::json(nullptr);
        j["fnr"] = report.fnr ? nlohmann::json(*report.fnr) : nlohmann::json(nullptr);
        auto& rows = j["users"] = nlohmann::json::array();
        for (std::size_t i = 0; i < report.users.size(); ++i)
            rows.push_back({{"user", m.user_label(report.users[i])},
                            {"fake", static_cast<bool>(report.actually_fake[i])},
                            {"predicted_fake", static_cast<bool>(report.predicted_fake[i])}});
        out << j.dump(2) << '\n';
    } else {
        out << "user,fake,predicted_fake\n";
        for (std::size_t i = 0; i < report.users.size(); ++i)
            out << m.user_label(report.users[i]) << ',' << int(report.actually_fake[i]) << ','
                << int(report.predicted_fake[i]) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace graphpoison

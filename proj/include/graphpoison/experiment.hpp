#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "graphpoison/mf.hpp"
#include "graphpoison/optimized.hpp"
#include "graphpoison/profile.hpp"
#include "graphpoison/ratings.hpp"

namespace graphpoison {

enum class AttackKind { none, random, average, bandwagon, covisitation, optimized };
enum class TargetMode { random, unpopular };
enum class DatasetFormat { movielens, csv, snapshot };

std::string_view to_string(AttackKind a);
std::string_view to_string(TargetMode t);
std::string_view to_string(DatasetFormat f);
/// These throw ConfigError on unknown names.
AttackKind parse_attack(std::string_view name);
TargetMode parse_target_mode(std::string_view name);
DatasetFormat parse_format(std::string_view name);

/// Items with at most this many ratings count as unpopular.
inline constexpr std::size_t kUnpopularMaxRatings = 5;

/// `count` distinct targets sampled uniformly from the mode's pool. Throws
/// ValidationError naming the pool size when it holds fewer than `count` items.
std::vector<ItemId> select_targets(const RatingMatrix& m, TargetMode mode, std::size_t count, std::uint64_t seed);

/// Profiles of one attack against t. cfg supplies n, the seed-independent
/// knobs of the optimized attack, and is otherwise ignored by the baselines.
std::vector<FakeUserProfile> generate_profiles(const RatingMatrix& m, AttackKind attack, ItemId t, std::size_t count,
                                               const AttackConfig& cfg, std::uint64_t seed);

struct DatasetSource {
    std::filesystem::path path;
    DatasetFormat format = DatasetFormat::movielens;
    CsvSchema csv{};
};

RatingMatrix load_dataset(const DatasetSource& source);

struct DetectorSettings {
    bool enabled = false;
    std::size_t normal_count = 150;
    std::size_t fake_count = 150;
    /// Budget of the defender's own run of the optimized attack when making
    /// training fakes; the attacker's settings apply where these are empty.
    std::optional<std::size_t> training_sample_cap = 100;
    std::optional<std::size_t> training_max_iter = 20;
};

struct ExperimentSpec {
    DatasetSource dataset;
    std::vector<AttackKind> attacks{AttackKind::none,      AttackKind::random,       AttackKind::average,
                                    AttackKind::bandwagon, AttackKind::covisitation, AttackKind::optimized};
    TargetMode target_mode = TargetMode::random;
    std::size_t num_targets = 10;
    std::vector<double> attack_sizes{0.005, 0.01, 0.03, 0.05};
    std::vector<std::size_t> list_lengths{10};
    /// Template for every cell; target, num_fake and seed are set per cell.
    AttackConfig attack{};
    /// Also evaluate a matrix-factorization recommender trained on each poisoned matrix.
    bool black_box = false;
    MfOptions mf{};
    DetectorSettings detector{};
    std::uint64_t seed = 0;
    /// Cells run concurrently on this many workers (each cell also fans out internally).
    std::size_t jobs = 1;
};

/// Mean over targets for one (attack, size, target mode, N).
struct ResultRow {
    AttackKind attack = AttackKind::none;
    double attack_size = 0.0;
    TargetMode target_mode = TargetMode::random;
    std::size_t list_length = 10;
    double hit_ratio = 0.0;
    std::optional<double> mf_hit_ratio;
    std::optional<double> fpr;
    std::optional<double> fnr;
    std::optional<double> filtered_hit_ratio;
    /// Targets that contributed; failed cells are left out of the means.
    std::size_t targets = 0;
    std::size_t failed = 0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

struct CellFailure {
    AttackKind attack = AttackKind::none;
    double attack_size = 0.0;
    ItemId target = 0;
    std::string message;

    friend bool operator==(const CellFailure&, const CellFailure&) = default;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<CellFailure> failures;
    std::vector<ItemId> targets;
    /// The same targets are used for every attack and size.
    bool targets_reused = true;
    std::uint64_t seed = 0;
    std::string config_hash;
    double wall_seconds = 0.0;

    /// Wall time is not compared.
    friend bool operator==(const ResultTable& a, const ResultTable& b) {
        return a.rows == b.rows && a.failures == b.failures && a.targets == b.targets &&
               a.targets_reused == b.targets_reused && a.seed == b.seed && a.config_hash == b.config_hash;
    }
};

nlohmann::json to_json(const AttackConfig& cfg);
/// Applies the keys present in `j` on top of `base`; unknown keys throw ConfigError.
AttackConfig attack_config_from_json(const nlohmann::json& j, AttackConfig base = {});
AttackConfig load_attack_config(const std::filesystem::path& path, AttackConfig base = {});

nlohmann::json to_json(const ExperimentSpec& spec);
ExperimentSpec experiment_spec_from_json(const nlohmann::json& j, ExperimentSpec base = {});

/// Hex digest of the canonical JSON form of the spec.
std::string config_hash(const ExperimentSpec& spec);

/// Called once per finished cell.
using CellProgress = std::function<void(AttackKind, double size, ItemId target, bool ok)>;

ResultTable run_experiment(const ExperimentSpec& spec, const CellProgress& progress = {});
/// Same, on an already loaded matrix (spec.dataset is only hashed).
ResultTable run_experiment(const ExperimentSpec& spec, const RatingMatrix& m, const CellProgress& progress = {});

enum class TableFormat { csv, json };

/// Stable column order, 4 decimals; a header line only when there are no rows.
std::string to_csv(const ResultTable& table);
nlohmann::json to_json(const ResultTable& table);
ResultTable result_table_from_json(const nlohmann::json& j);
/// Throws IoError if the path cannot be written.
void emit(const ResultTable& table, TableFormat format, const std::filesystem::path& path);

}  // namespace graphpoison

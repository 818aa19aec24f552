#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "graphpoison/errors.hpp"
#include "graphpoison/graph.hpp"
#include "graphpoison/profile.hpp"
#include "graphpoison/ratings.hpp"
#include "graphpoison/recommend.hpp"
#include "graphpoison/rwr.hpp"

namespace graphpoison {

struct PgdOptions {
    double step = 0.01;
    std::size_t max_iter = 50;
    /// Stop once the sup-norm change of w in one accepted step is at most this.
    double stop_tol = 1e-6;
    /// Step halvings tried per iteration before giving up on descent.
    std::size_t max_halvings = 30;
};

/// Every knob of the optimized attack.
struct AttackConfig {
    ItemId target = 0;
    std::size_t num_fake = 0;
    std::size_t num_fillers = 10;
    double lambda = 0.01;
    /// Width b of the Wilcoxon-Mann-Whitney surrogate.
    double width = 0.01;
    double alpha = 0.3;
    int r_max = kDefaultRatingMax;
    std::size_t top_n = 10;
    std::uint64_t seed = 0;
    PgdOptions pgd{};
    SolverOptions walk{};
    SolverOptions jacobian{};
    /// Upper bound on how many users of S enter the loss per fake user (sampled, seeded).
    std::optional<std::size_t> sample_cap = 300;
    /// Fake-user edges lighter than this are left out of the graph.
    double edge_cutoff = 1e-6;
    /// grad_p's default active set holds the top (factor * num_fillers) weights.
    std::size_t active_set_factor = 4;
    /// Recompute each user's top-N list every k-th PGD iteration.
    std::size_t list_refresh_every = 1;
    std::size_t threads = 0;

    /// Throws ValidationError when a field is out of its domain for `num_items` items.
    void validate(std::size_t num_items) const;
};

/// Relaxed ratings of the fake user under optimization, one per item, each in [0, r_max].
/// The target's entry is unused: its edge is fixed at r_max.
struct WeightVector {
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double squared_norm() const;
};

struct PgdRecord {
    double objective = 0.0;
    double loss = 0.0;
    double regularizer = 0.0;
    /// Coordinates clipped onto the box in the step that produced this iterate.
    std::size_t clipped = 0;
    double step = 0.0;
};

struct PgdTrace {
    std::vector<PgdRecord> records;
};

/// Raised when the objective stops being finite; carries the trace so far.
class OptimizationError : public NumericalError {
public:
    OptimizationError(const std::string& what, PgdTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
    const PgdTrace& trace() const noexcept { return trace_; }

private:
    PgdTrace trace_;
};

/// g(x) = 1 / (1 + exp(-x / b)).
double wmw(double x, double b);
/// g'(x) = g(x) (1 - g(x)) / b.
double wmw_derivative(double x, double b);

/// Sum of g(p_i - p_t) over the items of `list`; `item_probs` is indexed by item id.
double user_loss(std::span<const double> item_probs, const RecommendationList& list, ItemId t, double b);

/// r_max / num_items on every item except the target, which stays 0.
WeightVector initial_weights(std::size_t num_items, const AttackConfig& cfg);

/// Edges of the fake user: the target at r_max plus every item weight.
WeightedEdges fake_user_edges(const WeightVector& w, const AttackConfig& cfg);

/// The loss population: normal users who have not rated the target, reduced
/// to a seeded sample of at most cfg.sample_cap users (stream picks the sample).
std::vector<UserId> loss_users(const RatingMatrix& m, const AttackConfig& cfg, std::uint64_t stream = 0);

/// Warm starts for the sweep solves, kept across PGD iterations and across
/// fake users: one walk per loss user and one adjoint column per item.
/// Vectors are stored in the node layout of the graph they came from and
/// re-laid out when users are added.
class WarmStartCache {
public:
    struct Entry {
        std::size_t user_nodes = 0;
        std::vector<double> current;
        /// The solution before `current`, for linear extrapolation; dropped
        /// whenever the layout changes.
        std::vector<double> previous;

        /// Shifts `previous` out and stores a new solution.
        void push(std::span<const double> x, std::size_t nodes_of_users);
    };

    /// The entry re-laid out for a graph with `user_nodes` user nodes;
    /// nullptr when nothing usable is cached.
    Entry* find_walk(UserId u, std::size_t user_nodes) { return find(walks_, u, user_nodes); }
    Entry* find_adjoint(ItemId i, std::size_t user_nodes) { return find(adjoints_, i, user_nodes); }
    /// Creates the entry if needed. Not safe to call concurrently with
    /// anything else on the same cache.
    Entry& walk_slot(UserId u) { return walks_[u]; }
    Entry& adjoint_slot(ItemId i) { return adjoints_[i]; }

private:
    static Entry* find(std::unordered_map<std::uint32_t, Entry>& map, std::uint32_t key, std::size_t user_nodes);

    std::unordered_map<std::uint32_t, Entry> walks_;
    std::unordered_map<std::uint32_t, Entry> adjoints_;
};

/// The relaxed objective F(w) = |w|^2 + lambda * sum_{u in S} l_u for one
/// fake user attached to a fixed rating matrix.
///
/// evaluate() solves every user's walk and keeps the state; gradient() then
/// reuses those walks and lists, so it always refers to the last evaluated w.
class AttackObjective {
public:
    struct Value {
        double objective = 0.0;
        double loss = 0.0;
        double regularizer = 0.0;
    };

    /// Without `warm` the objective keeps a private cache.
    AttackObjective(const RatingMatrix& m, AttackConfig cfg, std::vector<UserId> users,
                    WarmStartCache* warm = nullptr);
    AttackObjective(const AttackObjective&) = delete;
    AttackObjective& operator=(const AttackObjective&) = delete;

    /// With refresh_lists false, each user's top-N list from the previous
    /// evaluation is reused (the first evaluation always builds them).
    Value evaluate(const WeightVector& w, bool refresh_lists = true);

    /// dF/dw at the last evaluated point. The adjoint of each user's loss is
    /// a combination of unit adjoints of the items in the top-N lists and the
    /// target, so one solve per distinct item suffices.
    std::vector<double> gradient();

    const std::vector<UserId>& users() const noexcept { return users_; }
    const TransitionMatrix& transition() const noexcept { return q_; }
    /// Node id of the fake user.
    NodeId fake_node() const noexcept { return static_cast<NodeId>(m_.num_users()); }

private:
    struct UserState {
        std::vector<double> walk;
        std::vector<ItemId> list;
    };

    const RatingMatrix& m_;
    AttackConfig cfg_;
    std::vector<UserId> users_;
    WarmStartCache own_cache_;
    WarmStartCache* warm_;
    std::vector<double> item_strength_;
    WeightVector w_;
    TransitionMatrix q_;
    std::vector<UserState> states_;
    bool evaluated_ = false;
};

/// Sum of l_u over loss_users(m, cfg) on the graph with the fake user attached via w.
double total_loss(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg);

/// F(w) = |w|^2 + lambda * total_loss.
double objective(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg);

/// Partials of Q[x][y] with respect to each weight w_i, as (item, value)
/// pairs with nonzero value. Node ids follow the attacked graph: users of m,
/// then the fake user at m.num_users(), then items. Derivatives are taken
/// on the continuous extension, so an edge whose weight sits below the cutoff
/// still has a slope. Throws NumericalError when x's row normalizer is 0.
std::vector<std::pair<ItemId, double>> grad_Q(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg,
                                              NodeId x, NodeId y);

/// Forward-mode sensitivities dp_u/dw_i for the columns in `active` (all
/// other columns are implicitly zero).
struct WalkJacobian {
    std::vector<ItemId> columns;
    /// columns[k]'s sensitivity over all nodes of the attacked graph.
    std::vector<std::vector<double>> values;
    bool converged = true;
};

/// Top (active_set_factor * num_fillers) items by weight (ties: lower id) plus the target.
std::vector<ItemId> active_items(const WeightVector& w, const AttackConfig& cfg);

WalkJacobian grad_p(const RatingMatrix& m, const WeightVector& w, UserId u, const AttackConfig& cfg,
                    std::optional<std::vector<ItemId>> active = std::nullopt);

/// dF/dw over all items; the target's entry is 0.
std::vector<double> grad_F(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg);

struct OptimizationResult {
    WeightVector weights;
    PgdTrace trace;
};

/// Projected gradient descent on F from initial_weights().
OptimizationResult optimize_weights(const RatingMatrix& m, const AttackConfig& cfg);

/// Same, with an explicit loss population and optional warm starts.
OptimizationResult optimize_weights(const RatingMatrix& m, const AttackConfig& cfg, std::vector<UserId> users,
                                    WarmStartCache* warm = nullptr);

/// Target at r_max; the n heaviest non-target items (ties: lower id) as
/// fillers, rated by sampling each item's normal-user rating distribution.
FakeUserProfile synthesize_profile(const RatingMatrix& m, const WeightVector& w, const AttackConfig& cfg,
                                   std::uint64_t seed);

/// Called after each fake user is synthesized.
using AttackProgress = std::function<void(std::size_t index, const FakeUserProfile&, const PgdTrace&)>;

/// Adds cfg.num_fake fake users one at a time, each optimized against the
/// matrix that already holds the previous ones.
std::vector<FakeUserProfile> run_attack(const RatingMatrix& m, const AttackConfig& cfg,
                                        const AttackProgress& progress = {});

}  // namespace graphpoison

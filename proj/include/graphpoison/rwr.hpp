#pragma once

#include <span>
#include <vector>

#include "graphpoison/graph.hpp"

namespace graphpoison {

struct SolverOptions {
    double tol = 1e-10;
    std::size_t max_iter = 1000;
};

/// Random-walk-with-restart distribution from one start node.
struct StationaryDistribution {
    NodeId start = 0;
    double alpha = 0.0;
    std::vector<double> probs;
    bool converged = false;
    std::size_t iterations = 0;
    /// Last sup-norm change between sweeps.
    double residual = 0.0;

    double item(const TransitionMatrix& q, ItemId i) const { return probs[q.item_node(i)]; }
};

/// Solves p = (1 - alpha) * Q^T p + alpha * e_start (probability mass flows
/// along Q's rows) by sweeping users then items in place until the sup-norm
/// change is <= tol. An isolated start node yields e_start.
///
/// `warm_start`, if non-empty, must have q.num_nodes() entries.
StationaryDistribution solve_rwr(const TransitionMatrix& q, NodeId start, double alpha,
                                 const SolverOptions& opts = {}, std::span<const double> warm_start = {});

/// Result of an in-place sweep solve; `converged` is false when max_iter was hit.
struct SweepSolution {
    std::vector<double> values;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Solves the adjoint system y = (1 - alpha) * Q y + rhs with the same sweep order.
SweepSolution solve_adjoint(const TransitionMatrix& q, std::span<const double> rhs, double alpha,
                            const SolverOptions& opts = {}, std::span<const double> warm_start = {});

/// Solves z = (1 - alpha) * Q^T z + rhs, the propagation system shared by
/// the walk itself and its forward-mode sensitivities.
SweepSolution solve_propagation(const TransitionMatrix& q, std::span<const double> rhs, double alpha,
                                const SolverOptions& opts = {}, std::span<const double> warm_start = {});

/// Number of right-hand sides solved together by solve_block().
inline constexpr std::size_t kBlockColumns = 8;

enum class SweepKind {
    /// z = (1 - alpha) * Q^T z + rhs
    propagation,
    /// y = (1 - alpha) * Q y + rhs
    adjoint,
};

struct BlockSolveStatus {
    bool converged = false;
    std::size_t iterations = 0;
};

/// Solves kBlockColumns independent systems in one pass over the graph.
/// `rhs` and `x` are node-major: entry (node, c) lives at [node * kBlockColumns + c].
/// `x` holds the warm start on entry and the solution on return. Sweeps stop
/// once no column moved by more than tol.
BlockSolveStatus solve_block(const TransitionMatrix& q, SweepKind kind, std::span<const double> rhs, double alpha,
                             std::span<double> x, const SolverOptions& opts = {});

/// Walks from several start nodes, solved kBlockColumns at a time. The
/// sweep count of a block is set by its slowest column, so results can differ
/// from solve_rwr() within the tolerance.
std::vector<StationaryDistribution> solve_rwr_many(const TransitionMatrix& q, std::span<const NodeId> starts,
                                                   double alpha, const SolverOptions& opts = {});

}  // namespace graphpoison

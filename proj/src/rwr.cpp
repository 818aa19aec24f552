#include "graphpoison/rwr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphpoison/errors.hpp"

namespace graphpoison {

namespace {

// In-place sweeps do not conserve mass between iterations; the exact fixed
// point sums to one, so the converged vector is rescaled onto that plane.
void normalize_mass(std::vector<double>& p) {
    double sum = 0.0;
    for (double x : p) sum += x;
    if (sum > 0.0)
        for (double& x : p) x /= sum;
}

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ValidationError("restart probability must lie in (0, 1], got " + std::to_string(alpha));
}

}  // namespace

StationaryDistribution solve_rwr(const TransitionMatrix& q, NodeId start, double alpha, const SolverOptions& opts,
                                 std::span<const double> warm_start) {
    check_alpha(alpha);
    const auto n = q.num_nodes();
    if (start >= n) throw ValidationError("start node " + std::to_string(start) + " out of range");

    StationaryDistribution d;
    d.start = start;
    d.alpha = alpha;
    if (q.neighbors(start).empty()) {
        d.probs.assign(n, 0.0);
        d.probs[start] = 1.0;
        d.converged = true;
        return d;
    }
    if (!warm_start.empty()) {
        if (warm_start.size() != n) throw ValidationError("warm start has wrong length");
        d.probs.assign(warm_start.begin(), warm_start.end());
    } else {
        d.probs.assign(n, 0.0);
        d.probs[start] = 1.0;
    }

    auto& p = d.probs;
    const double damp = 1.0 - alpha;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        double delta = 0.0;
        for (NodeId x = 0; x < n; ++x) {
            auto nb = q.neighbors(x);
            auto in = q.backward(x);
            double acc = 0.0;
            for (std::size_t k = 0; k < nb.size(); ++k) acc += in[k] * p[nb[k]];
            double next = damp * acc + (x == start ? alpha : 0.0);
            delta = std::max(delta, std::abs(next - p[x]));
            p[x] = next;
        }
        d.iterations = it + 1;
        d.residual = delta;
        if (delta <= opts.tol) {
            d.converged = true;
            break;
        }
    }
    if (d.converged) normalize_mass(p);
    return d;
}

SweepSolution solve_adjoint(const TransitionMatrix& q, std::span<const double> rhs, double alpha,
                              const SolverOptions& opts, std::span<const double> warm_start) {
    check_alpha(alpha);
    const auto n = q.num_nodes();
    if (rhs.size() != n) throw ValidationError("adjoint right-hand side has wrong length");
    SweepSolution s;
    if (!warm_start.empty()) {
        if (warm_start.size() != n) throw ValidationError("warm start has wrong length");
        s.values.assign(warm_start.begin(), warm_start.end());
    } else {
        s.values.assign(rhs.begin(), rhs.end());
    }
    auto& y = s.values;
    const double damp = 1.0 - alpha;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        double delta = 0.0;
        for (NodeId x = 0; x < n; ++x) {
            auto nb = q.neighbors(x);
            auto out = q.forward(x);
            double acc = 0.0;
            for (std::size_t k = 0; k < nb.size(); ++k) acc += out[k] * y[nb[k]];
            double next = damp * acc + rhs[x];
            delta = std::max(delta, std::abs(next - y[x]));
            y[x] = next;
        }
        s.iterations = it + 1;
        if (delta <= opts.tol) {
            s.converged = true;
            break;
        }
    }
    return s;
}

SweepSolution solve_propagation(const TransitionMatrix& q, std::span<const double> rhs, double alpha,
                                  const SolverOptions& opts, std::span<const double> warm_start) {
    check_alpha(alpha);
    const auto n = q.num_nodes();
    if (rhs.size() != n) throw ValidationError("propagation right-hand side has wrong length");
    SweepSolution s;
    if (!warm_start.empty()) {
        if (warm_start.size() != n) throw ValidationError("warm start has wrong length");
        s.values.assign(warm_start.begin(), warm_start.end());
    } else {
        s.values.assign(rhs.begin(), rhs.end());
    }
    auto& z = s.values;
    const double damp = 1.0 - alpha;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        double delta = 0.0;
        for (NodeId x = 0; x < n; ++x) {
            auto nb = q.neighbors(x);
            auto in = q.backward(x);
            double acc = 0.0;
            for (std::size_t k = 0; k < nb.size(); ++k) acc += in[k] * z[nb[k]];
            double next = damp * acc + rhs[x];
            delta = std::max(delta, std::abs(next - z[x]));
            z[x] = next;
        }
        s.iterations = it + 1;
        if (delta <= opts.tol) {
            s.converged = true;
            break;
        }
    }
    return s;
}

BlockSolveStatus solve_block(const TransitionMatrix& q, SweepKind kind, std::span<const double> rhs, double alpha,
                             std::span<double> x, const SolverOptions& opts) {
    constexpr std::size_t B = kBlockColumns;
    check_alpha(alpha);
    const auto n = q.num_nodes();
    if (rhs.size() != n * B || x.size() != n * B) throw ValidationError("block solve buffers have wrong length");
    const double damp = 1.0 - alpha;
    BlockSolveStatus status;
    for (std::size_t it = 0; it < opts.max_iter; ++it) {
        double delta = 0.0;
        for (NodeId v = 0; v < n; ++v) {
            auto nb = q.neighbors(v);
            auto coef = kind == SweepKind::propagation ? q.backward(v) : q.forward(v);
            double acc[B] = {};
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const double c = coef[k];
                const double* src = x.data() + std::size_t{nb[k]} * B;
                for (std::size_t j = 0; j < B; ++j) acc[j] += c * src[j];
            }
            double* dst = x.data() + std::size_t{v} * B;
            const double* r = rhs.data() + std::size_t{v} * B;
            for (std::size_t j = 0; j < B; ++j) {
                const double next = damp * acc[j] + r[j];
                delta = std::max(delta, std::abs(next - dst[j]));
                dst[j] = next;
            }
        }
        status.iterations = it + 1;
        if (delta <= opts.tol) {
            status.converged = true;
            break;
        }
    }
    return status;
}

std::vector<StationaryDistribution> solve_rwr_many(const TransitionMatrix& q, std::span<const NodeId> starts,
                                                   double alpha, const SolverOptions& opts) {
    constexpr std::size_t B = kBlockColumns;
    check_alpha(alpha);
    const auto n = q.num_nodes();
    for (auto s : starts)
        if (s >= n) throw ValidationError("start node " + std::to_string(s) + " out of range");
    std::vector<StationaryDistribution> out(starts.size());
    std::vector<double> x(n * B), rhs(n * B);
    for (std::size_t first = 0; first < starts.size(); first += B) {
        const auto cols = std::min(B, starts.size() - first);
        std::fill(x.begin(), x.end(), 0.0);
        std::fill(rhs.begin(), rhs.end(), 0.0);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto s = starts[first + c];
            x[s * B + c] = 1.0;
            rhs[s * B + c] = q.neighbors(s).empty() ? 1.0 : alpha;
        }
        const auto status = solve_block(q, SweepKind::propagation, rhs, alpha, x, opts);
        for (std::size_t c = 0; c < cols; ++c) {
            auto& d = out[first + c];
            d.start = starts[first + c];
            d.alpha = alpha;
            d.converged = status.converged;
            d.iterations = status.iterations;
            d.probs.resize(n);
            for (std::size_t i = 0; i < n; ++i) d.probs[i] = x[i * B + c];
            if (d.converged) normalize_mass(d.probs);
        }
    }
    return out;
}

}  // namespace graphpoison

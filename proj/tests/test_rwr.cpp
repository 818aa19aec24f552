#include <numeric>

#include "doctest.h"
#include "graphpoison/rwr.hpp"
#include "support.hpp"

using namespace graphpoison;
using namespace testing;

TEST_CASE("restart-only walk stays at the start") {
    Rng rng(1);
    const auto q = build_transition(random_matrix(rng, 4, 4, 0.5));
    const auto p = solve_rwr(q, 2, 1.0);
    CHECK(p.converged);
    for (NodeId x = 0; x < q.num_nodes(); ++x) CHECK(p.probs[x] == (x == 2 ? 1.0 : 0.0));
}

TEST_CASE("isolated start node") {
    const auto m = RatingMatrix::from_triples(2, 1, {{0, 0, 3}}, 5);
    const auto p = solve_rwr(build_transition(m), 1, 0.3);
    CHECK(p.converged);
    CHECK(p.probs == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("four-node toy graph matches a dense solve") {
    // u0-i0 (4), u0-i1 (2), u1-i1 (5)
    const auto m = RatingMatrix::from_triples(2, 2, {{0, 0, 4}, {0, 1, 2}, {1, 1, 5}}, 5);
    const auto q = build_transition(m);
    const auto dense = dense_transition(q);
    for (NodeId s = 0; s < 4; ++s) {
        const auto p = solve_rwr(q, s, 0.3);
        const auto ref = dense_rwr(dense, s, 0.3);
        for (NodeId x = 0; x < 4; ++x) CHECK(std::abs(p.probs[x] - ref(x)) <= 1e-8);
    }
}

TEST_CASE("random graphs match dense solves and conserve mass") {
    Rng rng(42);
    for (int trial = 0; trial < 40; ++trial) {
        const auto users = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const auto items = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        const auto m = random_matrix(rng, users, items, 0.4);
        const auto q = build_transition(m);
        const auto dense = dense_transition(q);
        const double alpha = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
        for (NodeId s = 0; s < q.num_nodes(); ++s) {
            const auto p = solve_rwr(q, s, alpha);
            REQUIRE(p.converged);
            const auto ref = dense_rwr(dense, s, alpha);
            for (NodeId x = 0; x < q.num_nodes(); ++x) CHECK(std::abs(p.probs[x] - ref(x)) <= 1e-8);
            CHECK(std::accumulate(p.probs.begin(), p.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("warm start reaches the same solution") {
    Rng rng(9);
    const auto q = build_transition(random_matrix(rng, 8, 8, 0.3));
    const auto cold = solve_rwr(q, 0, 0.3);
    const auto warm = solve_rwr(q, 0, 0.3, {}, cold.probs);
    CHECK(warm.iterations <= 2);
    for (NodeId x = 0; x < q.num_nodes(); ++x) CHECK(std::abs(warm.probs[x] - cold.probs[x]) <= 1e-9);
}

TEST_CASE("iteration cap reports non-convergence") {
    Rng rng(9);
    const auto q = build_transition(random_matrix(rng, 8, 8, 0.3));
    SolverOptions opts;
    opts.max_iter = 1;
    CHECK_FALSE(solve_rwr(q, 0, 0.01, opts).converged);
}

TEST_CASE("adjoint and propagation systems match dense solves") {
    Rng rng(17);
    const auto q = build_transition(random_matrix(rng, 5, 6, 0.4));
    const auto dense = dense_transition(q);
    const auto n = q.num_nodes();
    std::vector<double> rhs(n);
    for (auto& r : rhs) r = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), Eigen::Index(n));
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd y = (id - 0.7 * dense).partialPivLu().solve(b);
    const Eigen::VectorXd z = (id - 0.7 * dense.transpose()).partialPivLu().solve(b);
    const auto ya = solve_adjoint(q, rhs, 0.3);
    const auto zp = solve_propagation(q, rhs, 0.3);
    CHECK(ya.converged);
    CHECK(zp.converged);
    for (std::size_t x = 0; x < n; ++x) {
        CHECK(std::abs(ya.values[x] - y(Eigen::Index(x))) <= 1e-8);
        CHECK(std::abs(zp.values[x] - z(Eigen::Index(x))) <= 1e-8);
    }
}

TEST_CASE("block solves match single solves") {
    Rng rng(23);
    const auto q = build_transition(random_matrix(rng, 9, 7, 0.3));
    const auto n = q.num_nodes();
    std::vector<NodeId> starts{0, 3, 5, 8, 9, 12, 15, 1, 2, 4};
    const auto many = solve_rwr_many(q, starts, 0.3);
    REQUIRE(many.size() == starts.size());
    for (std::size_t k = 0; k < starts.size(); ++k) {
        const auto one = solve_rwr(q, starts[k], 0.3);
        CHECK(many[k].start == starts[k]);
        for (std::size_t x = 0; x < n; ++x) CHECK(std::abs(many[k].probs[x] - one.probs[x]) <= 1e-9);
    }

    std::vector<double> rhs(n * kBlockColumns, 0.0), x(n * kBlockColumns, 0.0);
    for (std::size_t c = 0; c < kBlockColumns; ++c) rhs[(c % n) * kBlockColumns + c] = 1.0 + double(c);
    const auto status = solve_block(q, SweepKind::adjoint, rhs, 0.3, x);
    CHECK(status.converged);
    for (std::size_t c = 0; c < kBlockColumns; ++c) {
        std::vector<double> col(n, 0.0);
        col[c % n] = 1.0 + double(c);
        const auto ref = solve_adjoint(q, col, 0.3);
        for (std::size_t node = 0; node < n; ++node)
            CHECK(std::abs(x[node * kBlockColumns + c] - ref.values[node]) <= 1e-9);
    }
}

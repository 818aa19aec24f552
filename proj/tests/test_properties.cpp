#include "doctest.h"
#include "properties.hpp"

using namespace testing;

namespace {

void require_holds(const Violation& v) {
    INFO(v.value_or(""));
    CHECK_FALSE(v.has_value());
}

}  // namespace

TEST_CASE("iterates stay in the box") { require_holds(check_projection_bounds(1, 15)); }
TEST_CASE("profiles respect the filler budget") { require_holds(check_profile_budget(2, 10)); }
TEST_CASE("transition rows are stochastic") { require_holds(check_row_stochastic(3, 30)); }
TEST_CASE("walk probabilities sum to one") { require_holds(check_mass_conservation(4, 30)); }
TEST_CASE("hit ratio grows with N") { require_holds(check_hit_ratio_monotone(5, 10)); }
TEST_CASE("pipeline is bit-deterministic with concurrency") { require_holds(check_determinism(6)); }
TEST_CASE("fake-user row ignores the scale of its weights") { require_holds(check_fake_row_scale_invariant(7, 50)); }
TEST_CASE("user loss does not grow with the target's probability") { require_holds(check_loss_monotone_in_target(8, 200)); }
TEST_CASE("baseline fillers are distinct and avoid the target") { require_holds(check_baseline_fillers(9, 1000)); }
TEST_CASE("unattacked rows do not depend on attack size") { require_holds(check_unattacked_rows_agree(10)); }

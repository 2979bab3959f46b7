#include <cmath>

#include "doctest.h"
#include "shiftsel/error.hpp"
#include "shiftsel/shift.hpp"

using namespace shiftsel;

namespace {

double max_abs_diff(const ShiftDegrees& a, const ShiftDegrees& b) {
  return std::max({std::abs(a.spurious - b.spurious), std::abs(a.label - b.label), std::abs(a.covariate - b.covariate)});
}

}  // namespace

TEST_CASE("quantify_shifts on hand-made histograms") {
  const auto fig = quantify_shifts(GroupCounts{{2, 3, 2, 1}});
  CHECK(fig.spurious == doctest::Approx(3.0 / 8.0));
  CHECK(fig.label == doctest::Approx(0.5));
  CHECK(fig.covariate == doctest::Approx(5.0 / 8.0));

  CHECK(quantify_shifts(GroupCounts{{25, 25, 25, 25}}) == ShiftDegrees{0.5, 0.5, 0.5});

  // (450 + 450) / 1000 agree; (450 + 50) / 1000 positive; (450 + 50) / 1000 attribute +1.
  const auto strong = quantify_shifts(GroupCounts{{450, 50, 50, 450}});
  CHECK(strong.spurious == doctest::Approx(0.9));
  CHECK(strong.label == doctest::Approx(0.5));
  CHECK(strong.covariate == doctest::Approx(0.5));

  CHECK_THROWS_AS(quantify_shifts(GroupCounts{}), Error);
}

TEST_CASE("solve_group_counts closed form") {
  CHECK(solve_group_counts(8, {3.0 / 8.0, 0.5, 5.0 / 8.0}) == GroupCounts{{2, 3, 2, 1}});
  CHECK(solve_group_counts(100, {0.5, 0.5, 0.5}) == GroupCounts{{25, 25, 25, 25}});
  CHECK(solve_group_counts(1000, {0.9, 0.5, 0.5}) == GroupCounts{{450, 50, 50, 450}});
}

TEST_CASE("infeasible degrees are rejected with the violated group named") {
  CHECK_FALSE(is_feasible({0.9, 0.1, 0.5}));
  try {
    solve_group_counts(100, {0.9, 0.1, 0.5});
    FAIL("expected an infeasibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInfeasible);
    CHECK(std::string(e.what()).find("G3") != std::string::npos);
  }
  CHECK(is_feasible({0.5, 0.5, 0.5}));
  CHECK(is_feasible({3.0 / 8.0, 0.5, 5.0 / 8.0}));
}

TEST_CASE("round trip stays within rounding slack for random feasible degrees") {
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const auto s = sample_degrees(rng, DegreeMode::kTriple);
    REQUIRE(is_feasible(s));
    const std::int64_t n = 100 + static_cast<std::int64_t>(rng() % 5000);
    const auto counts = solve_group_counts(n, s);
    CHECK(counts.total() == n);
    for (int g = 0; g < kNumGroups; ++g) CHECK(counts[g] >= 0);
    CHECK(max_abs_diff(quantify_shifts(counts), s) <= 2.0 / static_cast<double>(n));
  }
}

TEST_CASE("attribute flip maps d_sc and d_cs to complements") {
  const GroupCounts c{{40, 7, 13, 21}};
  const auto s = quantify_shifts(c);
  const auto f = quantify_shifts(flip_attribute(c));
  CHECK(f.spurious == doctest::Approx(1.0 - s.spurious));
  CHECK(f.covariate == doctest::Approx(1.0 - s.covariate));
  CHECK(f.label == doctest::Approx(s.label));
}

TEST_CASE("single-shift sampling") {
  Rng rng(3);
  const double only[] = {0.9};
  CHECK(sample_degrees(rng, DegreeMode::kSingleShift, only, ShiftKind::kSpurious) == ShiftDegrees{0.9, 0.5, 0.5});
  const double grid[] = {0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99};
  for (int i = 0; i < 200; ++i) {
    const auto s = sample_degrees(rng, DegreeMode::kSingleShift, grid);
    const double comps[] = {s.spurious, s.label, s.covariate};
    int off_center = 0;
    for (double v : comps) {
      CHECK(std::find(std::begin(grid), std::end(grid), v) != std::end(grid));
      off_center += v != 0.5 ? 1 : 0;
    }
    CHECK(off_center <= 1);
  }
  CHECK_THROWS_AS(sample_degrees(rng, DegreeMode::kSingleShift), Error);
}

TEST_CASE("group index convention") {
  CHECK(group_index(1, 1) == 0);
  CHECK(group_index(-1, 1) == 1);
  CHECK(group_index(1, -1) == 2);
  CHECK(group_index(-1, -1) == 3);
  for (int g = 0; g < kNumGroups; ++g) CHECK(group_index(group_label(g), group_attribute(g)) == g);
}

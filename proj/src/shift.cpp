#include "shiftsel/shift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "shiftsel/error.hpp"

namespace shiftsel {

namespace {

// Slack allowed on a real-valued group fraction before a triple is
// declared infeasible.
constexpr double kFeasibilityTolerance = 1e-12;

bool in_unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(ShiftKind kind) {
  switch (kind) {
    case ShiftKind::kSpurious: return "d_sc";
    case ShiftKind::kLabel: return "d_ls";
    case ShiftKind::kCovariate: return "d_cs";
  }
  return "?";
}

ShiftDegrees quantify_shifts(const GroupCounts& counts) {
  for (auto c : counts.counts) {
    if (c < 0) throw Error(ErrorKind::kInvalidArgument, "negative group count");
  }
  const auto n = counts.total();
  if (n == 0) throw Error(ErrorKind::kDegenerateInput, "quantify_shifts: empty training set (n = 0)");
  const double inv = 1.0 / static_cast<double>(n);
  return ShiftDegrees{
      static_cast<double>(counts[0] + counts[3]) * inv,
      static_cast<double>(counts[0] + counts[2]) * inv,
      static_cast<double>(counts[0] + counts[1]) * inv,
  };
}

std::array<double, kNumGroups> group_fractions(const ShiftDegrees& s) noexcept {
  const double g1 = (s.spurious + s.label + s.covariate - 1.0) / 2.0;
  return {g1, s.covariate - g1, s.label - g1, s.spurious - g1};
}

bool is_feasible(const ShiftDegrees& s) noexcept {
  if (!in_unit_interval(s.spurious) || !in_unit_interval(s.label) || !in_unit_interval(s.covariate)) {
    return false;
  }
  const auto f = group_fractions(s);
  return std::all_of(f.begin(), f.end(), [](double v) { return v >= -kFeasibilityTolerance; });
}

GroupCounts solve_group_counts(std::int64_t n, const ShiftDegrees& s) {
  if (n < 4) throw Error(ErrorKind::kInvalidArgument, "solve_group_counts: n must be >= 4");
  if (!in_unit_interval(s.spurious) || !in_unit_interval(s.label) || !in_unit_interval(s.covariate)) {
    throw Error(ErrorKind::kInfeasible, "solve_group_counts: degrees must lie in [0, 1]");
  }
  const auto frac = group_fractions(s);
  const double nd = static_cast<double>(n);
  std::array<double, kNumGroups> real{};
  for (int g = 0; g < kNumGroups; ++g) {
    const double v = frac[static_cast<std::size_t>(g)];
    if (v < -kFeasibilityTolerance) {
      throw Error(ErrorKind::kInfeasible,
                  "solve_group_counts: infeasible degrees, group G" + std::to_string(g + 1) +
                      " would need " + std::to_string(v * nd) + " samples");
    }
    real[static_cast<std::size_t>(g)] = std::max(0.0, v) * nd;
  }

  GroupCounts out;
  std::array<double, kNumGroups> remainder{};
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < kNumGroups; ++i) {
    const double fl = std::floor(real[i]);
    out.counts[i] = static_cast<std::int64_t>(fl);
    remainder[i] = real[i] - fl;
    assigned += out.counts[i];
  }
  std::array<int, kNumGroups> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return remainder[static_cast<std::size_t>(a)] > remainder[static_cast<std::size_t>(b)];
  });
  for (std::int64_t k = 0; assigned + k < n; ++k) {
    out.counts[static_cast<std::size_t>(order[static_cast<std::size_t>(k % kNumGroups)])] += 1;
  }
  return out;
}

GroupCounts flip_attribute(const GroupCounts& counts) noexcept {
  GroupCounts out;
  out.counts = {counts.counts[2], counts.counts[3], counts.counts[0], counts.counts[1]};
  return out;
}

ShiftDegrees single_shift(ShiftKind kind, double value) noexcept {
  ShiftDegrees s;
  switch (kind) {
    case ShiftKind::kSpurious: s.spurious = value; break;
    case ShiftKind::kLabel: s.label = value; break;
    case ShiftKind::kCovariate: s.covariate = value; break;
  }
  return s;
}

ShiftDegrees sample_degrees(Rng& rng, DegreeMode mode, std::span<const double> grid,
                            std::optional<ShiftKind> kind) {
  if (mode == DegreeMode::kSingleShift) {
    if (grid.empty()) throw Error(ErrorKind::kInvalidArgument, "sample_degrees: single-shift grid is empty");
    for (double v : grid) {
      if (!in_unit_interval(v)) throw Error(ErrorKind::kInvalidArgument, "sample_degrees: grid value outside [0, 1]");
    }
    const ShiftKind k = kind ? *kind : static_cast<ShiftKind>(rng() % 3);
    const double v = grid[static_cast<std::size_t>(rng() % grid.size())];
    return single_shift(k, v);
  }
  for (int attempt = 0; attempt < kMaxRejectionAttempts; ++attempt) {
    ShiftDegrees s{uniform01(rng), uniform01(rng), uniform01(rng)};
    if (is_feasible(s)) return s;
  }
  throw Error(ErrorKind::kSampling, "sample_degrees: rejection sampling exceeded the attempt cap");
}

}  // namespace shiftsel

#pragma once

// Shift quantification for binary-label / binary-attribute data.
//
// Group convention (fixed across the project):
//   G1 = (y=+1, a=+1)   G2 = (y=-1, a=+1)
//   G3 = (y=+1, a=-1)   G4 = (y=-1, a=-1)
// so that
//   d_sc = (G1+G4)/n    label and attribute agree
//   d_ls = (G1+G3)/n    fraction of class +1
//   d_cs = (G1+G2)/n    fraction of attribute +1

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "shiftsel/rng.hpp"

namespace shiftsel {

inline constexpr int kNumGroups = 4;

/// Group index 0..3 for labels in {-1,+1}.
constexpr int group_index(int y, int a) noexcept {
  return (y > 0 ? 0 : 1) + (a > 0 ? 0 : 2);
}
constexpr int group_label(int g) noexcept { return (g % 2 == 0) ? 1 : -1; }
constexpr int group_attribute(int g) noexcept { return (g < 2) ? 1 : -1; }

struct ShiftDegrees {
  double spurious = 0.5;   // d_sc
  double label = 0.5;      // d_ls
  double covariate = 0.5;  // d_cs

  bool operator==(const ShiftDegrees&) const = default;
};

struct GroupCounts {
  std::array<std::int64_t, kNumGroups> counts{};

  std::int64_t total() const noexcept {
    return counts[0] + counts[1] + counts[2] + counts[3];
  }
  std::int64_t operator[](int g) const { return counts[static_cast<std::size_t>(g)]; }
  std::int64_t& operator[](int g) { return counts[static_cast<std::size_t>(g)]; }
  bool operator==(const GroupCounts&) const = default;
};

enum class ShiftKind { kSpurious, kLabel, kCovariate };
enum class DegreeMode { kTriple, kSingleShift };

std::string_view to_string(ShiftKind kind);

/// Throws Error(kDegenerateInput) when the counts are all zero.
ShiftDegrees quantify_shifts(const GroupCounts& counts);

/// Real-valued group fractions g_i/n implied by the degrees (may be negative
/// when infeasible).
std::array<double, kNumGroups> group_fractions(const ShiftDegrees& s) noexcept;

bool is_feasible(const ShiftDegrees& s) noexcept;

/// Integer group counts realizing `s` for a training set of size n, using
/// largest-remainder rounding so the counts sum to n exactly.
GroupCounts solve_group_counts(std::int64_t n, const ShiftDegrees& s);

/// Swap attribute labels (a -> -a): G1<->G3 and G2<->G4.
GroupCounts flip_attribute(const GroupCounts& counts) noexcept;

/// Triple mode: uniform over the feasible polytope by rejection.
/// Single-shift mode: one component drawn from `grid` (the component is
/// `kind` if given, otherwise drawn uniformly), the others fixed at 0.5.
ShiftDegrees sample_degrees(Rng& rng, DegreeMode mode,
                            std::span<const double> grid = {},
                            std::optional<ShiftKind> kind = std::nullopt);

ShiftDegrees single_shift(ShiftKind kind, double value) noexcept;

inline constexpr int kMaxRejectionAttempts = 100000;

}  // namespace shiftsel

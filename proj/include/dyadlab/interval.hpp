#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "dyadlab/errors.hpp"

namespace dyadlab {

/// Dyadic interval [index 2^-level, (index+1) 2^-level) inside [0,1).
/// The root is (0,0); the two halves of an interval are its children.
struct DyadicInterval {
  int level = 0;
  std::int64_t index = 0;

  DyadicInterval() = default;

  DyadicInterval(int lvl, std::int64_t idx) : level(lvl), index(idx) {
    if (lvl < 0 || lvl > 62 || idx < 0 || idx >= (std::int64_t{1} << lvl))
      fail(errc::invalid_input, "dyadic interval (" + std::to_string(lvl) + "," +
                                    std::to_string(idx) + ") out of range");
  }

  static DyadicInterval root() { return {}; }

  double length() const { return std::ldexp(1.0, -level); }
  double left() const { return static_cast<double>(index) * length(); }
  double right() const { return static_cast<double>(index + 1) * length(); }

  DyadicInterval left_half() const { return {level + 1, 2 * index}; }
  DyadicInterval right_half() const { return {level + 1, 2 * index + 1}; }

  DyadicInterval parent() const {
    if (level == 0) fail(errc::invalid_input, "root interval has no parent");
    return {level - 1, index / 2};
  }

  bool contains(const DyadicInterval& other) const {
    return other.level >= level && (other.index >> (other.level - level)) == index;
  }

  /// First grid cell covered by this interval at the given resolution.
  std::int64_t cell_begin(int resolution) const {
    if (level > resolution)
      fail(errc::resolution_too_coarse, "interval at level " + std::to_string(level) +
                                            " finer than resolution " + std::to_string(resolution));
    return index << (resolution - level);
  }

  /// Number of grid cells covered at the given resolution.
  std::int64_t cell_count(int resolution) const {
    if (level > resolution)
      fail(errc::resolution_too_coarse, "interval at level " + std::to_string(level) +
                                            " finer than resolution " + std::to_string(resolution));
    return std::int64_t{1} << (resolution - level);
  }

  std::string to_string() const {
    return "(" + std::to_string(level) + "," + std::to_string(index) + ")";
  }

  friend bool operator==(const DyadicInterval&, const DyadicInterval&) = default;
  friend auto operator<=>(const DyadicInterval&, const DyadicInterval&) = default;
};

/// All dyadic intervals with level <= max_level, ordered by (level, index).
inline std::vector<DyadicInterval> intervals_to_level(int max_level) {
  std::vector<DyadicInterval> out;
  out.reserve((std::size_t{2} << max_level) - 1);
  for (int lvl = 0; lvl <= max_level; ++lvl)
    for (std::int64_t k = 0; k < (std::int64_t{1} << lvl); ++k) out.emplace_back(lvl, k);
  return out;
}

}  // namespace dyadlab

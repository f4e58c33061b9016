#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dod/error.hpp"
#include "dod/linalg.hpp"

namespace dod {

using Rng = std::mt19937_64;

/// Independent, reproducible stream `stream` derived from `seed`.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x0d0du};
  return Rng(seq);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Axis-aligned parameter box; sampling is uniform.
struct ParameterBox {
  std::vector<std::pair<double, double>> bounds;

  std::size_t dim() const noexcept { return bounds.size(); }

  void validate() const {
    for (const auto& [lo, hi] : bounds)
      if (!(lo <= hi)) throw ConfigError("ParameterBox: empty interval");
  }

  bool contains(std::span<const double> x, double slack = 0.0) const {
    if (x.size() != bounds.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < bounds[i].first - slack || x[i] > bounds[i].second + slack) return false;
    return true;
  }

  Vector sample(Rng& rng) const {
    Vector x(bounds.size());
    for (std::size_t i = 0; i < bounds.size(); ++i)
      x[i] = bounds[i].first == bounds[i].second ? bounds[i].first : uniform(rng, bounds[i].first, bounds[i].second);
    return x;
  }

  bool operator==(const ParameterBox&) const = default;
};

}  // namespace dod

#pragma once

#include <cmath>
#include <memory>

#include "clansim/environment.hpp"
#include "clansim/models.hpp"

namespace testing {

inline clansim::Site S(int x, int y = 0, int z = 0) { return clansim::Site{{x, y, z}}; }

inline clansim::DisorderSpec homogeneous(double w) {
  clansim::DisorderSpec spec;
  spec.site = clansim::Marginal::degenerate(1.0);
  spec.scale = w;
  return spec;
}

inline clansim::Environment env_of(clansim::ModelPtr model, const clansim::Region& region, double w, std::uint64_t seed = 1) {
  return clansim::Environment::sample(std::move(model), homogeneous(w), region, seed);
}

/// Number of binomial standard errors between p_hat over n trials and p.
inline double z_score(double p_hat, double p, std::size_t n) { return std::abs(p_hat - p) / std::sqrt(p * (1 - p) / static_cast<double>(n)); }

}  // namespace testing

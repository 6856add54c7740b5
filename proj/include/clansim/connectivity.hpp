#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "clansim/clan_engine.hpp"

namespace clansim {

struct SpaceTimePoint {
  Site x{};
  double t = 0.0;
};

/// Box B_{L,T}(X) = Λ[x;L] × [t−T, t] with boundary shell width delta.
struct Box {
  SpaceTimePoint center;
  double L = 1.0;
  double T = 1.0;
  double delta = 2.0;

  Region inner(int dim) const { return Region::ball(dim, center.x, L); }
  Region outer(int dim) const { return Region::ball(dim, center.x, L + delta); }
  double bottom() const { return center.t - T; }
  /// Site of the shell Λ[x;L+δ] \ Λ[x;L].
  bool in_shell(int dim, const Site& s) const { return outer(dim).contains(s) && !inner(dim).contains(s); }
};

/// Open-path connection from X down to Y in a realized configuration (closed lives,
/// strictly decreasing births along the path). Throws std::invalid_argument if t_Y > t_X
/// or a point lies outside the window.
bool connected(const CylinderConfiguration& config, const SpaceTimePoint& X, const SpaceTimePoint& Y);

/// Disjoint occurrence of X1 → Y1 and X2 → Y2: two open paths sharing no cylinder. Paths
/// for the first connection are enumerated exhaustively; returns nullopt when more than
/// `max_paths` would be needed.
std::optional<bool> connected_disjointly(const CylinderConfiguration& config, const SpaceTimePoint& X1, const SpaceTimePoint& Y1,
                                         const SpaceTimePoint& X2, const SpaceTimePoint& Y2, std::size_t max_paths = 100000);

struct ConnectivityEstimate {
  Estimate estimate;
  std::size_t unresolved = 0;  // explorations that hit a limit before deciding (counted as connected)
};

/// Fraction of replicas where X → Y. With a box, the free process is restricted to
/// Λ[x_B;L] × [t_B−T, t_B]; otherwise the stationary process on the environment window is
/// explored lazily from X.
ConnectivityEstimate estimate_G(const Environment& env, const SpaceTimePoint& X, const SpaceTimePoint& Y, const std::optional<Box>& box,
                                std::size_t replicas, std::uint64_t seed, const ClanLimits& limits = {}, unsigned workers = 1,
                                double confidence = 0.95);

/// Value of the boundary functional for one configuration of Λ[x;L+δ] × [−T, 0]: number of
/// bottom-face sites reached plus the total time measure of shell sites reached.
double boundary_functional(const CylinderConfiguration& config, const Site& x, double L, double T, double delta);

/// Estimate of G_{B_{L+δ,T}((x,0))}((x,0), ∂). Throws RegionMarginError when Λ[x;L+δ]
/// does not fit in the environment window.
Estimate boundary_sum(const Environment& env, const Site& x, double L, double T, std::size_t replicas, std::uint64_t seed,
                      unsigned workers = 1, double confidence = 0.95);

enum class Regularity { regular, singular, inconclusive };
std::string to_string(Regularity r);

struct RegularityVerdict {
  Site site{};
  double m = 0.0;
  double L = 0.0;
  double T = 0.0;
  double threshold = 0.0;  // e^{−m(L+δ)}
  Estimate estimate;
  Regularity verdict = Regularity::inconclusive;
};

RegularityVerdict is_regular(const Environment& env, const Site& x, double m, double L, const std::function<double(double)>& T_fn,
                             std::size_t replicas, double confidence, std::uint64_t seed, unsigned workers = 1);

/// exp(−m(L+δ)·N) with N the integer part of min{dist/(L+δ), max[‖x−y‖/(L+δ), |t_X−t_Y|/T]}.
double regular_path_bound(const Site& x, const Site& y, double t_X, double t_Y, double L, double T, double delta, double m,
                          double dist_to_complement);

}  // namespace clansim

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clansim/connectivity.hpp"

namespace clansim {

struct MultiscaleParameters {
  int d = 1;
  double alpha = 0.0;
  double a = 0.0;
  double nu = 0.0;
  double p = 0.0;
  double kappa = 0.0;
  double b = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  double theta = 0.0;
  double theta0 = 0.0;
  double m0 = 1.0;
  double m_inf = 0.5;
  double q = 0.0;
  double q0 = 0.0;
  int R = 1;
  double L0 = 10.0;
  double Delta = 0.0;      // e^{-L0^eta}; underflows to 0 for d >= 3
  double log_Delta = 0.0;  // -L0^eta

  nlohmann::json to_json() const;
};

struct Feasibility {
  bool feasible = false;
  std::optional<MultiscaleParameters> parameters;
  std::string violated;  // first violated inequality when infeasible
};

/// Optimal α = d + √(d²+d).
double optimal_alpha(int d);

/// Solves the constraint chain by interval propagation (midpoints of feasible intervals).
/// Without `a`, uses 1.01 × the a-threshold.
Feasibility feasible_parameters(int d, std::optional<double> a = std::nullopt, double L0 = 10.0, double m0 = 1.0, double m_inf = 0.5);

/// Independent re-check of every inequality; returns the violated ones (empty when valid).
std::vector<std::string> verify_parameters(const MultiscaleParameters& p);

/// L_{k+1} = L_k^α with T(L) = exp(L^ν) kept in log space.
class ScaledSequence {
 public:
  ScaledSequence(long double L0, long double alpha, long double nu, int scales);
  std::size_t size() const { return L_.size(); }
  long double L(std::size_t k) const { return L_.at(k); }
  /// ln T(L_k) = L_k^ν.
  long double log_T(std::size_t k) const;
  long double log10_T(std::size_t k) const;
  /// ln(T(L_k)/L_k^n) grows along the represented scales and ends positive.
  bool faster_than_power(int n) const;
  /// Scales k >= 2 have astronomically large heights and are never simulated.
  static void require_simulable(std::size_t k);

 private:
  long double alpha_, nu_;
  std::vector<long double> L_;
};

/// e^{−(1+Δ)w} + (1−e^{−w})(1−e^{−Δ})e^{−Δw}.
double k_delta(double w, double delta);

struct EventBResult {
  bool holds = false;
  double log_sum = 0.0;  // Σ ln(1/K_Δ)
  double margin = 0.0;   // l^b − Σ
};

/// Checks Π_{γ ⊆ tildeΛ} K_Δ(w(γ)) ≥ e^{−l^b}; tildeΛ is a union of boxes.
EventBResult event_B_check(const Environment& env, const std::vector<Region>& tilde_lambda, double delta, double l, double b);

struct EventAResult {
  bool holds = false;
  std::vector<Site> centers;
  std::size_t singular = 0;
  bool exact = false;  // decided by exhaustive search
};

/// Can the singular (and inconclusive) sites be covered by R cubes Λ[x_j; 2(l+δ)+1] with
/// centres among the verdict sites? Greedy first, exhaustive search for small sets.
EventAResult event_A_check(const std::vector<RegularityVerdict>& verdicts, int R, double l, double delta);

/// ∪_j Λ[x_j; l^κ] ∩ Λ[x; L+δ].
std::vector<Region> tilde_lambda(int dim, const std::vector<Site>& centers, const Site& x, double L, double delta, double l, double kappa);

struct GoodProbability {
  double L = 0.0;
  double target = 0.0;  // 1 − L^{−p}
  Estimate estimate;
  std::size_t singular = 0;
  std::size_t inconclusive = 0;
};

/// Fraction of fresh environments whose window centre is (m,L)-regular (inconclusive
/// verdicts count as singular).
GoodProbability empirical_good_probability(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, double m, double L,
                                           const std::function<double(double)>& T_fn, double p, std::size_t env_replicas,
                                           std::size_t mc_replicas, std::uint64_t seed, unsigned workers = 1);

struct ProbeResult {
  Estimate estimate;  // P{Ψ > ρ}
  bool pass = false;
};

/// Estimates P{Ψ > ρ} over fresh environments; passes when the upper bound is below ε_ρ.
ProbeResult initial_scale_probe(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, const SizeFunction& size, double rho,
                                double epsilon_rho, std::size_t replicas, std::uint64_t seed, unsigned workers = 1);

}  // namespace clansim

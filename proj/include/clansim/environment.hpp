#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clansim/animal_model.hpp"
#include "clansim/rng.hpp"
#include "clansim/stats.hpp"

namespace clansim {

/// One-dimensional law of a disorder variable.
struct Marginal {
  enum class Family { degenerate, uniform, exponential, lognormal, bernoulli_mixture };
  Family family = Family::degenerate;
  std::vector<double> params{1.0};

  static Marginal degenerate(double value);
  static Marginal uniform(double lo, double hi);
  static Marginal exponential(double rate);
  static Marginal lognormal(double mu, double sigma);
  /// `high` with probability p, `low` otherwise.
  static Marginal bernoulli_mixture(double low, double high, double p);
  /// Build from a name and positional parameters; throws std::invalid_argument on unknown
  /// names or invalid parameters.
  static Marginal from_name(const std::string& name, const std::vector<double>& params);

  void validate() const;
  double sample(Stream& rng) const;
  std::string name() const;
  nlohmann::json to_json() const;
};

enum class DisorderKind { site, site_link };
enum class RateMap { product, mean, random_cluster };

struct DisorderSpec {
  DisorderKind kind = DisorderKind::site;
  Marginal site = Marginal::degenerate(1.0);
  Marginal link = Marginal::degenerate(0.5);
  RateMap rate_map = RateMap::product;
  double scale = 1.0;
  /// Multiplier per animal kind (missing entries count as 1).
  std::vector<double> kind_weights;

  void validate() const;
  nlohmann::json to_json() const;
  std::uint64_t hash() const;
};

/// A frozen realization of the disorder on a window, with the derived birth rates of every
/// animal of the catalog.
class Environment {
 public:
  static Environment sample(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, std::uint64_t seed);
  static Environment sample(ModelPtr model, const DisorderSpec& spec, const Region& region, std::uint64_t seed);

  const AnimalCatalog& catalog() const { return *catalog_; }
  const std::shared_ptr<const AnimalCatalog>& catalog_ptr() const { return catalog_; }
  const AnimalModel& model() const { return catalog_->model(); }
  const Region& region() const { return catalog_->region(); }
  const DisorderSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  double rate(AnimalId id) const { return rates_[id]; }
  std::span<const double> rates() const { return rates_; }
  double total_rate() const;

  /// Region on which disorder variables were drawn (window dilated by ell1).
  const Region& value_region() const { return value_region_; }
  double site_value(const Site& s) const;
  double link_value(const Link& l) const;

  /// Same window and disorder, with every rate multiplied by c >= 0.
  Environment scaled(double c) const;
  /// Same window, explicit rates (one per catalog animal).
  Environment with_rates(std::vector<double> rates) const;

  nlohmann::json snapshot() const;
  static Environment from_snapshot(const nlohmann::json& snap, std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec);

 private:
  Environment() = default;
  void derive_rates();

  std::shared_ptr<const AnimalCatalog> catalog_;
  DisorderSpec spec_;
  std::uint64_t seed_ = 0;
  Region value_region_;
  std::vector<double> site_values_;
  std::vector<double> link_values_;
  std::vector<double> rates_;
};

/// Default size function S(γ) = model.size(γ).
SizeFunction default_size(const AnimalModel& model);

double upsilon(const Environment& env, const Region& region);
double psi(const Environment& env, const SizeFunction& size, const Region& region);
double xi(const Environment& env, const Region& region);

struct HaloRatios {
  double u1 = 0.0;
  double u2 = 0.0;
};
/// min / max of |H(γ)|/S(γ) over animals contained in the region.
HaloRatios halo_ratios(const Environment& env, const SizeFunction& size, const Region& region);

struct DisorderDiagnostics {
  double upsilon = 0.0;
  double psi = 0.0;
  double xi = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
};
DisorderDiagnostics diagnose(const Environment& env, const SizeFunction& size, const Region& region);

/// 2d²(1 + √(1+1/d) + 1/(2d)).
double a_threshold(int d);

/// Mean of ln^a(1+Υ) over fresh environments on the catalog window.
Estimate aleph_estimate(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, double a, const Region& region,
                        std::size_t replicas, std::uint64_t seed, unsigned workers = 1);

struct HypothesisReport {
  int d = 1;
  double a_threshold = 0.0;
  double a = 0.0;
  double epsilon = 0.0;
  Estimate aleph;
  bool aleph_pass = false;
  Estimate psi;
  bool psi_pass = false;
  Estimate xi;
  double u1 = 0.0;
  double u2 = 0.0;
  bool corollary_pass = false;
  std::string window;
  nlohmann::json to_json() const;
};

/// Monte Carlo check of the disorder hypotheses. Suprema are taken over the window only,
/// so the reported values are lower bounds of the infinite-volume ones.
HypothesisReport check_hypotheses(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, const SizeFunction& size,
                                  double epsilon, const Region& region, std::size_t replicas, std::uint64_t seed,
                                  std::optional<double> a = std::nullopt, unsigned workers = 1);

}  // namespace clansim

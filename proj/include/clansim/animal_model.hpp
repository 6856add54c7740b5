#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "clansim/lattice.hpp"

namespace clansim {

/// Translation class of animals: sorted offsets whose lexicographic minimum is the origin.
struct Prototype {
  std::vector<Site> offsets;
  std::vector<Link> links;
  int kind = 0;

  /// Translate so the smallest site is the origin and sort offsets and links.
  static Prototype canonical(std::vector<Site> sites, std::vector<Link> links, int kind);
  friend bool operator==(const Prototype&, const Prototype&) = default;
};

/// A placed animal: prototype translated by `anchor`.
struct Animal {
  std::vector<Site> support;  // sorted
  std::vector<Link> links;    // sorted
  int kind = 0;
  int prototype = 0;
  Site anchor{};
  std::uint32_t model_uid = 0;

  bool contains(const Site& s) const;
  int diameter() const { return clansim::diameter(support); }
};

using AnimalId = std::uint32_t;
using SizeFunction = std::function<double(const Animal&)>;

struct ModelGeometry {
  int d = 1;
  int ell1 = 0;
  int ell2 = 0;
  int ell0 = 0;
  double delta = 2.0;

  /// 3*ell0, floored at 2 so that delta > 1 also holds for single-site exclusion.
  static double default_delta(int ell0);
  /// Shell width 3(ell0-2)/(2(d-1)); only defined for d >= 2.
  static double reference_delta(int d, int ell0);
};

/// Contract every concrete model implements. Models are translation invariant and
/// immutable; incompatibility, halos and the interaction function are closed forms.
class AnimalModel {
 public:
  virtual ~AnimalModel() = default;
  AnimalModel(const AnimalModel&) = delete;
  AnimalModel& operator=(const AnimalModel&) = delete;

  virtual std::string name() const = 0;
  /// True when M only takes the values 0 and 1.
  virtual bool deterministic() const = 0;
  /// Default size function S(γ) = |V(γ)|.
  virtual double size(const Animal& a) const { return static_cast<double>(a.support.size()); }

  int dim() const { return dim_; }
  std::uint32_t uid() const { return uid_; }
  const std::vector<Prototype>& prototypes() const { return prototypes_; }
  const ModelGeometry& geometry() const { return geometry_; }
  /// Number of distinct kinds (rate multipliers are indexed by kind).
  int kinds() const;

  Animal make_animal(int prototype, const Site& anchor) const;

  /// Interaction-matrix entry: can the presence of b change the acceptance of a?
  bool incompatible(const Animal& a, const Animal& b) const;
  /// Sites hit by every animal incompatible with a.
  std::vector<Site> halo(const Animal& a) const;
  /// Acceptance probability M(γ|ξ); `present` lists animals with repetition.
  double acceptance(const Animal& g, std::span<const Animal* const> present) const;

 protected:
  AnimalModel(int dim, std::vector<Prototype> prototypes);
  /// Derive ell1 from the prototypes and ell2 by scanning relative offsets up to
  /// `reach`. Must be called at the end of the most-derived constructor.
  void finalize_geometry(int reach);

  virtual bool do_incompatible(const Animal& a, const Animal& b) const = 0;
  virtual std::vector<Site> do_halo(const Animal& a) const { return a.support; }
  virtual double do_acceptance(const Animal& g, std::span<const Animal* const> present) const = 0;

  void check(const Animal& a) const;

 private:
  int dim_;
  std::uint32_t uid_;
  std::vector<Prototype> prototypes_;
  ModelGeometry geometry_;
};

using ModelPtr = std::shared_ptr<const AnimalModel>;

/// All animals of a model with support inside a finite region, interned to dense ids.
class AnimalCatalog {
 public:
  AnimalCatalog(ModelPtr model, Region region);

  const AnimalModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const Region& region() const { return region_; }
  std::size_t size() const { return animals_.size(); }
  const Animal& animal(AnimalId id) const { return animals_[id]; }
  const std::vector<Animal>& animals() const { return animals_; }

  /// Animals whose support contains s (empty outside the region).
  std::span<const AnimalId> containing(const Site& s) const;
  /// Animals of the catalog incompatible with id (including id itself when self-incompatible).
  std::span<const AnimalId> incompatible_with(AnimalId id) const;
  std::span<const Site> halo(AnimalId id) const;
  /// Key identifying the placed animal independently of the region (used for RNG streams).
  std::uint64_t stable_key(AnimalId id) const { return keys_[id]; }
  std::optional<AnimalId> find(int prototype, const Site& anchor) const;
  std::vector<AnimalId> animals_within(const Region& sub) const;

 private:
  ModelPtr model_;
  Region region_;
  std::vector<Animal> animals_;
  std::vector<std::uint64_t> keys_;
  std::unordered_map<std::uint64_t, AnimalId> by_key_;
  std::vector<std::size_t> site_offsets_;
  std::vector<AnimalId> site_animals_;
  std::vector<std::size_t> inc_offsets_;
  std::vector<AnimalId> inc_animals_;
  std::vector<std::size_t> halo_offsets_;
  std::vector<Site> halo_sites_;
};

std::uint64_t animal_key(int prototype, const Site& anchor);

/// Animals γ with x ∈ V(γ) and V(γ) ⊆ region.
std::vector<Animal> enumerate_containing(const Site& x, const AnimalModel& model, const Region& region);

/// Randomized check of the crossing property of the shell width: every chain of animals
/// (diameter ≤ ell1, consecutive distance ≤ ell2) crossing Λ[0;L+δ]\Λ[0;L] has at least
/// two animals inside the shell.
bool verify_delta(const ModelGeometry& geometry, int trials, std::uint64_t seed);

}  // namespace clansim

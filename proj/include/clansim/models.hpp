#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clansim/animal_model.hpp"

namespace clansim {

/// Map N -> [0,1] used as the area-interaction F and the Strauss penalty.
struct Profile {
  enum class Type { free, hardcore, geometric, table };
  Type type = Type::free;
  double beta = 1.0;           // geometric: beta^n
  std::vector<double> table;   // table: value at n, last entry repeats

  static Profile free() { return {}; }
  static Profile hardcore() { return {Type::hardcore, 1.0, {}}; }
  static Profile geometric(double beta);
  static Profile from_table(std::vector<double> values);

  double operator()(long n) const;
  /// True when the profile takes a single value on {0,...,nmax}.
  bool constant_up_to(long nmax) const;
  std::string str() const;
};

/// Hard-core exclusion between animals of the given shapes (supports overlapping is forbidden).
/// Every shape comes in `kinds` kinds that share the support.
class ExclusionModel final : public AnimalModel {
 public:
  ExclusionModel(int dim, const std::vector<std::vector<Site>>& shapes, int kinds, std::string label);
  std::string name() const override { return label_; }
  bool deterministic() const override { return true; }

 protected:
  bool do_incompatible(const Animal& a, const Animal& b) const override;
  double do_acceptance(const Animal& g, std::span<const Animal* const> present) const override;

 private:
  std::string label_;
};

/// Lattice area-interaction process: grains x+G, M(x|A) = F(|(x+G) ∩ (A⊕G)|).
class AreaInteractionModel final : public AnimalModel {
 public:
  AreaInteractionModel(int dim, std::vector<Site> grain, Profile f);
  std::string name() const override { return "area_interaction"; }
  bool deterministic() const override;
  const Profile& profile() const { return f_; }
  const std::vector<Site>& grain() const { return grain_; }

 protected:
  bool do_incompatible(const Animal& a, const Animal& b) const override;
  double do_acceptance(const Animal& g, std::span<const Animal* const> present) const override;

 private:
  std::vector<Site> grain_;
  Profile f_;
};

/// Lattice Strauss process: single-site animals, acceptance penalty(k) where k counts
/// present points within sup-distance r (with multiplicity).
class StraussModel final : public AnimalModel {
 public:
  StraussModel(int dim, int r, Profile penalty);
  std::string name() const override { return "strauss"; }
  bool deterministic() const override;
  int radius() const { return r_; }

 protected:
  bool do_incompatible(const Animal& a, const Animal& b) const override;
  std::vector<Site> do_halo(const Animal& a) const override;
  double do_acceptance(const Animal& g, std::span<const Animal* const> present) const override;

 private:
  int r_;
  Profile penalty_;
};

/// Loss network on nearest-neighbour links: calls are connected link sets with at most
/// max_len links; a call is blocked if any of its links would exceed capacity.
class LossNetworkModel final : public AnimalModel {
 public:
  /// capacity <= 0 means unlimited. `overrides` set individual link capacities.
  LossNetworkModel(int dim, int max_len, int capacity, std::map<Link, int> overrides = {});
  std::string name() const override { return "loss_network"; }
  bool deterministic() const override { return true; }
  /// Capacity of a link; 0 means unlimited.
  int capacity(const Link& l) const;

 protected:
  bool do_incompatible(const Animal& a, const Animal& b) const override;
  double do_acceptance(const Animal& g, std::span<const Animal* const> present) const override;

 private:
  int capacity_;
  std::map<Link, int> overrides_;
};

/// Chopped random-cluster model: connected link sets with at most max_links links
/// (single vertices included), vertex-disjointness exclusion.
class RandomClusterModel final : public AnimalModel {
 public:
  RandomClusterModel(int dim, int max_links);
  std::string name() const override { return "random_cluster"; }
  bool deterministic() const override { return true; }

 protected:
  bool do_incompatible(const Animal& a, const Animal& b) const override;
  double do_acceptance(const Animal& g, std::span<const Animal* const> present) const override;
};

/// Connected sets of nearest-neighbour links with 1..max_links links, canonical and deduplicated.
std::vector<std::vector<Link>> connected_link_sets(int dim, int max_links);

ModelPtr make_monomer_model(int dim, int kinds = 1);
ModelPtr make_domino_model(int dim);
ModelPtr make_exclusion_model(int dim, const std::vector<std::vector<Site>>& shapes, int kinds = 1);
ModelPtr make_area_interaction_model(int dim, std::vector<Site> grain, Profile f);
ModelPtr make_strauss_model(int dim, int r, Profile penalty);
ModelPtr make_loss_network_model(int dim, int max_len, int capacity, std::map<Link, int> overrides = {});
ModelPtr make_random_cluster_model(int dim, int max_links);

/// Random-cluster weight Π_{links} J_xy/(1-J_xy) · Π_{sites} 1/J_x.
/// Throws std::domain_error for a link value outside (0,1) or a site value <= 0.
double random_cluster_weight(const std::vector<double>& site_values, const std::vector<double>& link_values);

}  // namespace clansim

#include "clansim/models.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace clansim {

Profile Profile::geometric(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("geometric profile needs beta in [0,1]");
  return {Type::geometric, beta, {}};
}

Profile Profile::from_table(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("profile table is empty");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("profile value out of [0,1]");
  return {Type::table, 1.0, std::move(values)};
}

double Profile::operator()(long n) const {
  switch (type) {
    case Type::free: return 1.0;
    case Type::hardcore: return n == 0 ? 1.0 : 0.0;
    case Type::geometric: return n == 0 ? 1.0 : std::pow(beta, static_cast<double>(n));
    case Type::table: return table[static_cast<std::size_t>(std::min<long>(n, static_cast<long>(table.size()) - 1))];
  }
  return 1.0;
}

bool Profile::constant_up_to(long nmax) const {
  if (nmax <= 0) return true;
  switch (type) {
    case Type::free: return true;
    case Type::hardcore: return false;
    case Type::geometric: return beta == 1.0;
    case Type::table: {
      const long top = std::min<long>(nmax, static_cast<long>(table.size()) - 1);
      for (long n = 1; n <= top; ++n)
        if ((*this)(n) != (*this)(0)) return false;
      return true;
    }
  }
  return true;
}

std::string Profile::str() const {
  std::ostringstream os;
  switch (type) {
    case Type::free: os << "free"; break;
    case Type::hardcore: os << "hardcore"; break;
    case Type::geometric: os << "geometric(" << beta << ")"; break;
    case Type::table:
      os << "table(";
      for (std::size_t i = 0; i < table.size(); ++i) os << (i ? "," : "") << table[i];
      os << ")";
      break;
  }
  return os.str();
}

namespace {

bool supports_intersect(const Animal& a, const Animal& b) {
  auto i = a.support.begin(), j = b.support.begin();
  while (i != a.support.end() && j != b.support.end()) {
    if (*i == *j) return true;
    if (*i < *j) ++i; else ++j;
  }
  return false;
}

bool links_intersect(const std::vector<Link>& a, const std::vector<Link>& b, const LossNetworkModel& m) {
  auto i = a.begin(), j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) {
      if (m.capacity(*i) > 0) return true;
      ++i;
      ++j;
    } else if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

bool binary_profile(const Profile& p, long nmax) {
  const long top = p.type == Profile::Type::table ? std::min<long>(nmax, static_cast<long>(p.table.size()) - 1) : std::min<long>(nmax, 64);
  for (long n = 0; n <= top; ++n) {
    const double v = p(n);
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

std::vector<Prototype> exclusion_prototypes(const std::vector<std::vector<Site>>& shapes, int kinds) {
  if (kinds < 1) throw std::invalid_argument("kinds must be >= 1");
  std::vector<Prototype> out;
  for (const auto& s : shapes)
    for (int k = 0; k < kinds; ++k) out.push_back(Prototype::canonical(s, {}, k));
  return out;
}

int max_diameter(const std::vector<std::vector<Site>>& shapes) {
  int d = 0;
  for (const auto& s : shapes) d = std::max(d, diameter(s));
  return d;
}

std::vector<Prototype> link_set_prototypes(int dim, int max_links, bool with_vertex) {
  std::vector<Prototype> out;
  if (with_vertex) out.push_back(Prototype::canonical({Site{}}, {}, 0));
  for (auto& ls : connected_link_sets(dim, max_links)) out.push_back(Prototype::canonical({}, ls, 0));
  return out;
}

}  // namespace

std::vector<std::vector<Link>> connected_link_sets(int dim, int max_links) {
  if (max_links < 1) throw std::invalid_argument("max_len must be >= 1");
  auto canon = [](std::vector<Link> ls) {
    Site m = ls.front().a;
    for (const auto& l : ls) m = std::min({m, l.a, l.b});
    for (auto& l : ls) l = Link::make(l.a - m, l.b - m);
    std::sort(ls.begin(), ls.end());
    return ls;
  };
  std::set<std::vector<Link>> all;
  std::set<std::vector<Link>> frontier;
  for (int i = 0; i < dim; ++i) frontier.insert(canon({Link::make(Site{}, Site::unit(i))}));
  all.insert(frontier.begin(), frontier.end());
  for (int n = 2; n <= max_links; ++n) {
    std::set<std::vector<Link>> next;
    for (const auto& ls : frontier) {
      for (const auto& l : ls)
        for (const Site& v : {l.a, l.b})
          for (int i = 0; i < dim; ++i)
            for (int sgn : {1, -1}) {
              const Site w = sgn > 0 ? v + Site::unit(i) : v - Site::unit(i);
              const Link e = Link::make(v, w);
              if (std::find(ls.begin(), ls.end(), e) != ls.end()) continue;
              auto grown = ls;
              grown.push_back(e);
              next.insert(canon(std::move(grown)));
            }
    }
    all.insert(next.begin(), next.end());
    frontier = std::move(next);
  }
  return {all.begin(), all.end()};
}

ExclusionModel::ExclusionModel(int dim, const std::vector<std::vector<Site>>& shapes, int kinds, std::string label)
    : AnimalModel(dim, exclusion_prototypes(shapes, kinds)), label_(std::move(label)) {
  finalize_geometry(max_diameter(shapes));
}

bool ExclusionModel::do_incompatible(const Animal& a, const Animal& b) const { return supports_intersect(a, b); }

double ExclusionModel::do_acceptance(const Animal& g, std::span<const Animal* const> present) const {
  for (const Animal* p : present)
    if (supports_intersect(g, *p)) return 0.0;
  return 1.0;
}

AreaInteractionModel::AreaInteractionModel(int dim, std::vector<Site> grain, Profile f)
    : AnimalModel(dim, {Prototype::canonical(grain, {}, 0)}), grain_(std::move(grain)), f_(std::move(f)) {
  finalize_geometry(diameter(grain_));
}

bool AreaInteractionModel::deterministic() const { return binary_profile(f_, static_cast<long>(grain_.size())); }

// Adding θ to ξ can change the covered count of V(a) only if the grains overlap. For a
// profile that is constant on {0..|G|} nothing ever changes; otherwise the pair is
// declared incompatible (exact for strictly monotone profiles, conservative otherwise).
bool AreaInteractionModel::do_incompatible(const Animal& a, const Animal& b) const {
  if (f_.constant_up_to(static_cast<long>(grain_.size()))) return false;
  return supports_intersect(a, b);
}

double AreaInteractionModel::do_acceptance(const Animal& g, std::span<const Animal* const> present) const {
  long covered = 0;
  for (const Site& s : g.support) {
    for (const Animal* p : present)
      if (p->contains(s)) {
        ++covered;
        break;
      }
  }
  return f_(covered);
}

StraussModel::StraussModel(int dim, int r, Profile penalty)
    : AnimalModel(dim, {Prototype::canonical({Site{}}, {}, 0)}), r_(r), penalty_(std::move(penalty)) {
  if (r < 1) throw std::invalid_argument("Strauss radius must be >= 1");
  finalize_geometry(r);
}

bool StraussModel::deterministic() const { return binary_profile(penalty_, LONG_MAX); }

bool StraussModel::do_incompatible(const Animal& a, const Animal& b) const {
  if (penalty_.constant_up_to(LONG_MAX)) return false;
  return sup_distance(a.anchor, b.anchor) <= r_;
}

std::vector<Site> StraussModel::do_halo(const Animal& a) const {
  if (penalty_.constant_up_to(LONG_MAX)) return a.support;
  return Region::ball(dim(), a.anchor, r_).sites();
}

double StraussModel::do_acceptance(const Animal& g, std::span<const Animal* const> present) const {
  long k = 0;
  for (const Animal* p : present)
    if (sup_distance(g.anchor, p->anchor) <= r_) ++k;
  return penalty_(k);
}

LossNetworkModel::LossNetworkModel(int dim, int max_len, int capacity, std::map<Link, int> overrides)
    : AnimalModel(dim, link_set_prototypes(dim, max_len, false)), capacity_(std::max(capacity, 0)), overrides_(std::move(overrides)) {
  for (const auto& [l, c] : overrides_)
    if (c < 0) throw std::invalid_argument("link capacity must be >= 1 (or 0 for unlimited)");
  finalize_geometry(max_len);
}

int LossNetworkModel::capacity(const Link& l) const {
  auto it = overrides_.find(l);
  return it == overrides_.end() ? capacity_ : it->second;
}

bool LossNetworkModel::do_incompatible(const Animal& a, const Animal& b) const { return links_intersect(a.links, b.links, *this); }

double LossNetworkModel::do_acceptance(const Animal& g, std::span<const Animal* const> present) const {
  for (const Link& e : g.links) {
    const int cap = capacity(e);
    if (cap <= 0) continue;
    int load = 0;
    for (const Animal* p : present)
      if (std::binary_search(p->links.begin(), p->links.end(), e)) ++load;
    if (load + 1 > cap) return 0.0;
  }
  return 1.0;
}

RandomClusterModel::RandomClusterModel(int dim, int max_links) : AnimalModel(dim, link_set_prototypes(dim, max_links, true)) {
  finalize_geometry(max_links);
}

bool RandomClusterModel::do_incompatible(const Animal& a, const Animal& b) const { return supports_intersect(a, b); }

double RandomClusterModel::do_acceptance(const Animal& g, std::span<const Animal* const> present) const {
  for (const Animal* p : present)
    if (supports_intersect(g, *p)) return 0.0;
  return 1.0;
}

ModelPtr make_monomer_model(int dim, int kinds) {
  return std::make_shared<ExclusionModel>(dim, std::vector<std::vector<Site>>{{Site{}}}, kinds, "monomer");
}

ModelPtr make_domino_model(int dim) {
  std::vector<std::vector<Site>> shapes;
  for (int i = 0; i < dim; ++i) shapes.push_back({Site{}, Site::unit(i)});
  return std::make_shared<ExclusionModel>(dim, shapes, 1, "domino");
}

ModelPtr make_exclusion_model(int dim, const std::vector<std::vector<Site>>& shapes, int kinds) {
  return std::make_shared<ExclusionModel>(dim, shapes, kinds, "exclusion");
}

ModelPtr make_area_interaction_model(int dim, std::vector<Site> grain, Profile f) {
  return std::make_shared<AreaInteractionModel>(dim, std::move(grain), std::move(f));
}

ModelPtr make_strauss_model(int dim, int r, Profile penalty) { return std::make_shared<StraussModel>(dim, r, std::move(penalty)); }

ModelPtr make_loss_network_model(int dim, int max_len, int capacity, std::map<Link, int> overrides) {
  return std::make_shared<LossNetworkModel>(dim, max_len, capacity, std::move(overrides));
}

ModelPtr make_random_cluster_model(int dim, int max_links) { return std::make_shared<RandomClusterModel>(dim, max_links); }

double random_cluster_weight(const std::vector<double>& site_values, const std::vector<double>& link_values) {
  double w = 1.0;
  for (double j : link_values) {
    if (!(j > 0.0 && j < 1.0)) throw std::domain_error("random-cluster link parameter must lie in (0,1)");
    w *= j / (1.0 - j);
  }
  for (double j : site_values) {
    if (!(j > 0.0)) throw std::domain_error("random-cluster site parameter must be positive");
    w /= j;
  }
  return w;
}

}  // namespace clansim

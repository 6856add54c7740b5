#include "clansim/animal_model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "clansim/errors.hpp"
#include "clansim/rng.hpp"

namespace clansim {

namespace {

std::atomic<std::uint32_t> g_next_uid{1};

Site min_site(const std::vector<Site>& sites, const std::vector<Link>& links) {
  Site m = sites.empty() ? links.front().a : sites.front();
  for (const auto& s : sites) m = std::min(m, s);
  for (const auto& l : links) m = std::min({m, l.a, l.b});
  return m;
}

int norm(const Site& s) { return sup_distance(s, Site{}); }

}  // namespace

Prototype Prototype::canonical(std::vector<Site> sites, std::vector<Link> links, int kind) {
  for (const auto& l : links) {
    sites.push_back(l.a);
    sites.push_back(l.b);
  }
  if (sites.empty()) throw std::invalid_argument("animal support must be nonempty");
  const Site m = min_site(sites, links);
  Prototype p;
  p.kind = kind;
  for (auto& s : sites) p.offsets.push_back(s - m);
  std::sort(p.offsets.begin(), p.offsets.end());
  p.offsets.erase(std::unique(p.offsets.begin(), p.offsets.end()), p.offsets.end());
  for (auto& l : links) p.links.push_back(Link::make(l.a - m, l.b - m));
  std::sort(p.links.begin(), p.links.end());
  p.links.erase(std::unique(p.links.begin(), p.links.end()), p.links.end());
  return p;
}

bool Animal::contains(const Site& s) const { return std::binary_search(support.begin(), support.end(), s); }

double ModelGeometry::default_delta(int ell0) { return std::max(3.0 * ell0, 2.0); }

double ModelGeometry::reference_delta(int d, int ell0) {
  if (d < 2) throw std::invalid_argument("reference shell width needs d >= 2");
  return 3.0 * (ell0 - 2) / (2.0 * (d - 1));
}

AnimalModel::AnimalModel(int dim, std::vector<Prototype> prototypes)
    : dim_(dim), uid_(g_next_uid.fetch_add(1)), prototypes_(std::move(prototypes)) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("model dimension must be in [1,3]");
  if (prototypes_.empty()) throw std::invalid_argument("model needs at least one animal shape");
  for (const auto& p : prototypes_)
    for (const auto& s : p.offsets)
      for (int i = dim; i < kMaxDim; ++i)
        if (s.c[i] != 0) throw std::invalid_argument("animal shape uses coordinates beyond the model dimension");
}

int AnimalModel::kinds() const {
  int k = 0;
  for (const auto& p : prototypes_) k = std::max(k, p.kind + 1);
  return k;
}

void AnimalModel::finalize_geometry(int reach) {
  geometry_.d = dim_;
  geometry_.ell1 = 0;
  for (const auto& p : prototypes_) geometry_.ell1 = std::max(geometry_.ell1, diameter(p.offsets));
  const Region offsets = Region::centered(dim_, reach);
  int ell2 = 0;
  for (int p = 0; p < static_cast<int>(prototypes_.size()); ++p) {
    const Animal a = make_animal(p, Site{});
    for (int q = 0; q < static_cast<int>(prototypes_.size()); ++q) {
      offsets.for_each([&](const Site& v) {
        const Animal b = make_animal(q, v);
        const int dist = set_distance(a.support, b.support);
        if (dist > ell2 && do_incompatible(a, b)) ell2 = dist;
      });
    }
  }
  geometry_.ell2 = ell2;
  geometry_.ell0 = geometry_.ell1 + geometry_.ell2;
  geometry_.delta = ModelGeometry::default_delta(geometry_.ell0);
}

Animal AnimalModel::make_animal(int prototype, const Site& anchor) const {
  if (prototype < 0 || prototype >= static_cast<int>(prototypes_.size()))
    throw std::out_of_range("prototype index out of range");
  const Prototype& p = prototypes_[prototype];
  Animal a;
  a.kind = p.kind;
  a.prototype = prototype;
  a.anchor = anchor;
  a.model_uid = uid_;
  a.support.reserve(p.offsets.size());
  for (const auto& o : p.offsets) a.support.push_back(o + anchor);
  a.links.reserve(p.links.size());
  for (const auto& l : p.links) a.links.push_back(l + anchor);
  return a;
}

void AnimalModel::check(const Animal& a) const {
  if (a.model_uid != uid_) throw ModelMismatch("animal belongs to a different model than " + name());
}

bool AnimalModel::incompatible(const Animal& a, const Animal& b) const {
  check(a);
  check(b);
  return do_incompatible(a, b);
}

std::vector<Site> AnimalModel::halo(const Animal& a) const {
  check(a);
  auto h = do_halo(a);
  std::sort(h.begin(), h.end());
  h.erase(std::unique(h.begin(), h.end()), h.end());
  return h;
}

double AnimalModel::acceptance(const Animal& g, std::span<const Animal* const> present) const {
  check(g);
  for (const Animal* p : present) check(*p);
  return std::clamp(do_acceptance(g, present), 0.0, 1.0);
}

std::uint64_t animal_key(int prototype, const Site& anchor) {
  return stream_key(0x5eed, {static_cast<std::uint64_t>(prototype), static_cast<std::uint64_t>(anchor.c[0]),
                             static_cast<std::uint64_t>(anchor.c[1]), static_cast<std::uint64_t>(anchor.c[2])});
}

AnimalCatalog::AnimalCatalog(ModelPtr model, Region region) : model_(std::move(model)), region_(region) {
  if (!model_) throw std::invalid_argument("catalog needs a model");
  if (region_.dim() != model_->dim()) throw std::invalid_argument("region dimension differs from model dimension");
  const int d = model_->dim();
  const auto& protos = model_->prototypes();
  for (int p = 0; p < static_cast<int>(protos.size()); ++p) {
    Site omin = protos[p].offsets.front(), omax = protos[p].offsets.front();
    for (const auto& o : protos[p].offsets)
      for (int i = 0; i < d; ++i) {
        omin.c[i] = std::min(omin.c[i], o.c[i]);
        omax.c[i] = std::max(omax.c[i], o.c[i]);
      }
    const Region anchors(d, region_.lo() - omin, region_.hi() - omax);
    anchors.for_each([&](const Site& anchor) {
      const auto id = static_cast<AnimalId>(animals_.size());
      animals_.push_back(model_->make_animal(p, anchor));
      keys_.push_back(animal_key(p, anchor));
      by_key_.emplace(keys_.back(), id);
    });
  }

  const std::size_t nsites = region_.size();
  std::vector<std::size_t> counts(nsites + 1, 0);
  for (const auto& a : animals_)
    for (const auto& s : a.support) ++counts[region_.index(s) + 1];
  for (std::size_t i = 0; i < nsites; ++i) counts[i + 1] += counts[i];
  site_offsets_ = counts;
  site_animals_.resize(counts.back());
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (AnimalId id = 0; id < animals_.size(); ++id)
    for (const auto& s : animals_[id].support) site_animals_[fill[region_.index(s)]++] = id;

  const int ell2 = model_->geometry().ell2;
  inc_offsets_.assign(1, 0);
  halo_offsets_.assign(1, 0);
  std::vector<AnimalId> cand;
  for (AnimalId id = 0; id < animals_.size(); ++id) {
    const Animal& a = animals_[id];
    cand.clear();
    for (const auto& s : a.support) {
      const Region near = Region::ball(d, s, ell2);
      near.for_each([&](const Site& y) {
        if (!region_.contains(y)) return;
        for (AnimalId b : containing(y)) cand.push_back(b);
      });
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (AnimalId b : cand)
      if (model_->incompatible(a, animals_[b])) inc_animals_.push_back(b);
    inc_offsets_.push_back(inc_animals_.size());
    for (const auto& h : model_->halo(a)) halo_sites_.push_back(h);
    halo_offsets_.push_back(halo_sites_.size());
  }
}

std::span<const AnimalId> AnimalCatalog::containing(const Site& s) const {
  if (!region_.contains(s)) return {};
  const std::size_t i = region_.index(s);
  return {site_animals_.data() + site_offsets_[i], site_offsets_[i + 1] - site_offsets_[i]};
}

std::span<const AnimalId> AnimalCatalog::incompatible_with(AnimalId id) const {
  return {inc_animals_.data() + inc_offsets_[id], inc_offsets_[id + 1] - inc_offsets_[id]};
}

std::span<const Site> AnimalCatalog::halo(AnimalId id) const {
  return {halo_sites_.data() + halo_offsets_[id], halo_offsets_[id + 1] - halo_offsets_[id]};
}

std::optional<AnimalId> AnimalCatalog::find(int prototype, const Site& anchor) const {
  auto it = by_key_.find(animal_key(prototype, anchor));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::vector<AnimalId> AnimalCatalog::animals_within(const Region& sub) const {
  std::vector<AnimalId> out;
  for (AnimalId id = 0; id < animals_.size(); ++id)
    if (sub.contains_all(animals_[id].support)) out.push_back(id);
  return out;
}

std::vector<Animal> enumerate_containing(const Site& x, const AnimalModel& model, const Region& region) {
  std::vector<Animal> out;
  if (!region.contains(x)) return out;
  const auto& protos = model.prototypes();
  for (int p = 0; p < static_cast<int>(protos.size()); ++p)
    for (const auto& o : protos[p].offsets) {
      Animal a = model.make_animal(p, x - o);
      if (region.contains_all(a.support)) out.push_back(std::move(a));
    }
  return out;
}

namespace {

// Random site set of diameter ≤ ell1 containing q; with `outward` the set is pushed away
// from the origin along the dominant axis of q.
std::vector<Site> random_animal(Stream& rng, int d, int ell1, const Site& q, bool outward) {
  Site corner = q;
  int axis = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(q.c[i]) > std::abs(q.c[axis])) axis = i;
  for (int i = 0; i < d; ++i) {
    int shift = static_cast<int>(rng.uniform() * (ell1 + 1));
    if (outward && i == axis) shift = q.c[i] >= 0 ? 0 : ell1;
    corner.c[i] -= shift;
  }
  std::vector<Site> s{q};
  const int extra = static_cast<int>(rng.uniform() * 4);
  for (int k = 0; k < extra; ++k) {
    Site y = corner;
    for (int i = 0; i < d; ++i) y.c[i] += static_cast<int>(rng.uniform() * (ell1 + 1));
    s.push_back(y);
  }
  if (outward) {
    Site far = q;
    far.c[axis] += q.c[axis] >= 0 ? ell1 : -ell1;
    s.push_back(far);
  }
  return s;
}

}  // namespace

bool verify_delta(const ModelGeometry& g, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("verify_delta needs trials >= 1");
  if (!(g.delta > 1.0)) return false;
  if (g.ell0 == 0) return true;  // chains cannot move, so no chain crosses the shell
  const int d = g.d;
  const int L = 2 * (g.ell0 + 1) + 3;
  const int outer = static_cast<int>(std::floor(g.delta + 1e-9)) + L;
  const int max_steps = 8 * (outer + g.ell0) + 16;
  for (int t = 0; t < trials; ++t) {
    Stream rng(stream_key(seed, {static_cast<std::uint64_t>(StreamTag::multiscale), 0xde17a, static_cast<std::uint64_t>(t)}));
    const bool greedy = rng.uniform() < 0.5;
    Site q;
    const int axis = static_cast<int>(rng.uniform() * d);
    for (int i = 0; i < d; ++i) q.c[i] = static_cast<int>(rng.uniform() * (2 * L + 1)) - L;
    q.c[axis] = (rng.uniform() < 0.5 ? 1 : -1) * (L - static_cast<int>(rng.uniform() * (g.ell0 + 1)));
    std::vector<std::vector<Site>> chain;
    chain.push_back(random_animal(rng, d, g.ell1, q, greedy && rng.uniform() < 0.7));
    auto crossed_out = [&](const std::vector<Site>& a) {
      return std::any_of(a.begin(), a.end(), [&](const Site& s) { return norm(s) > outer; });
    };
    while (!crossed_out(chain.back()) && static_cast<int>(chain.size()) < max_steps) {
      const auto& cur = chain.back();
      Site p = cur[static_cast<std::size_t>(rng.uniform() * cur.size())];
      if (greedy || rng.uniform() < 0.3)
        p = *std::max_element(cur.begin(), cur.end(), [](const Site& a, const Site& b) { return norm(a) < norm(b); });
      Site next = p;
      const bool push = greedy ? rng.uniform() < 0.8 : rng.uniform() < 0.3;
      if (push) {
        for (int i = 0; i < d; ++i)
          if (std::abs(p.c[i]) == norm(p)) next.c[i] += p.c[i] >= 0 ? g.ell2 : -g.ell2;
      } else {
        for (int i = 0; i < d; ++i) next.c[i] += static_cast<int>(rng.uniform() * (2 * g.ell2 + 1)) - g.ell2;
      }
      chain.push_back(random_animal(rng, d, g.ell1, next, push));
    }
    if (!crossed_out(chain.back())) continue;
    const std::size_t j = chain.size() - 1;
    std::size_t i = j + 1;
    for (std::size_t k = 0; k <= j; ++k)
      if (std::any_of(chain[k].begin(), chain[k].end(), [&](const Site& s) { return norm(s) <= L; })) i = k;
    if (i > j) continue;
    int inside_shell = 0;
    for (std::size_t k = i; k <= j; ++k)
      if (std::all_of(chain[k].begin(), chain[k].end(), [&](const Site& s) { return norm(s) > L && norm(s) <= outer; }))
        ++inside_shell;
    if (inside_shell < 2) return false;
  }
  return true;
}

}  // namespace clansim

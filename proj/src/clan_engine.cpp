#include "clansim/clan_engine.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <map>
#include <unordered_map>

#include "clansim/errors.hpp"
#include "clansim/parallel.hpp"

namespace clansim {

std::string to_string(ClanStatus s) {
  switch (s) {
    case ClanStatus::closed: return "closed";
    case ClanStatus::escaped_space: return "escaped_space";
    case ClanStatus::escaped_time: return "escaped_time";
    case ClanStatus::budget_exceeded: return "budget_exceeded";
  }
  return "?";
}

std::vector<std::vector<std::uint32_t>> Clan::generations() const {
  std::vector<std::vector<std::uint32_t>> out;
  for (std::uint32_t i = 0; i < cylinders.size(); ++i) {
    const std::size_t g = generation[i] - 1;
    if (out.size() <= g) out.resize(g + 1);
    out[g].push_back(i);
  }
  return out;
}

namespace {

struct KeyHash {
  std::size_t operator()(const std::array<std::uint32_t, 3>& k) const noexcept {
    return static_cast<std::size_t>(hash_combine(hash_combine(k[0], k[1]), k[2]));
  }
};

std::array<std::uint32_t, 3> key_of(const Cylinder& c) { return {c.animal, c.block, c.draw}; }

void compute_stats(Clan& clan, const AnimalCatalog& catalog) {
  ClanStats s;
  s.n_cylinders = clan.cylinders.size();
  if (clan.cylinders.empty()) {
    clan.stats = s;
    return;
  }
  double min_birth = clan.t_ref;
  std::vector<Site> sites;
  for (const auto& c : clan.cylinders) {
    min_birth = std::min(min_birth, c.birth);
    const auto& sup = catalog.animal(c.animal).support;
    sites.insert(sites.end(), sup.begin(), sup.end());
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  s.tl = clan.t_ref - min_birth;
  s.sd = diameter(sites);
  s.ss = sites.size();
  s.n_generations = *std::max_element(clan.generation.begin(), clan.generation.end());
  clan.stats = s;
}

}  // namespace

std::vector<Cylinder> first_generation(CylinderSource& source, const Cylinder& c, bool strict_births) {
  std::vector<Cylinder> buf;
  for (AnimalId theta : source.catalog().incompatible_with(c.animal)) source.alive_at(theta, c.birth, buf);
  std::vector<Cylinder> out;
  for (const auto& a : buf)
    if (!a.same(c) && (strict_births ? a.birth < c.birth : precedes(a, c))) out.push_back(a);
  std::sort(out.begin(), out.end(), precedes);
  return out;
}

std::vector<Cylinder> covering(CylinderSource& source, const Site& x, double t) {
  std::vector<Cylinder> out;
  for (AnimalId id : source.catalog().containing(x)) source.alive_at(id, t, out);
  std::sort(out.begin(), out.end(), precedes);
  return out;
}

Clan explore(CylinderSource& source, std::vector<Cylinder> roots, const ExploreOptions& opt) {
  const AnimalCatalog& catalog = source.catalog();
  const Region& region = catalog.region();
  const auto& geo = catalog.model().geometry();
  const int margin = geo.ell1 + geo.ell2;
  const ClanLimits& lim = opt.limits;

  Clan clan;
  clan.t_ref = opt.t_ref;
  std::unordered_map<std::array<std::uint32_t, 3>, std::uint32_t, KeyHash> index;

  // Returns true when the exploration must end because of c.
  auto admit = [&](const Cylinder& c) {
    for (const Site& s : catalog.animal(c.animal).support) {
      if (lim.max_radius && sup_distance(s, opt.center) > *lim.max_radius) {
        clan.status = ClanStatus::escaped_space;
        return true;
      }
      if (!lim.region_is_wall) {
        const int d2c = region.distance_to_complement(s);
        if (d2c <= margin) {
          clan.escape_deficit = std::max(clan.escape_deficit, margin + 1 - d2c);
          clan.status = ClanStatus::escaped_space;
        }
      }
    }
    if (clan.status == ClanStatus::escaped_space) return true;
    if ((c.truncated && opt.truncation_is_escape) || opt.t_ref - c.birth > lim.max_depth_time) {
      clan.status = ClanStatus::escaped_time;
      return true;
    }
    if (clan.cylinders.size() > lim.max_cylinders) {
      clan.status = ClanStatus::budget_exceeded;
      return true;
    }
    if (opt.visit && opt.visit(c)) {
      clan.stopped = true;
      return true;
    }
    return false;
  };
  auto intern = [&](const Cylinder& c, std::uint32_t gen) -> std::pair<std::uint32_t, bool> {
    auto [it, fresh] = index.emplace(key_of(c), static_cast<std::uint32_t>(clan.cylinders.size()));
    if (fresh) {
      clan.cylinders.push_back(c);
      clan.generation.push_back(gen);
      clan.ancestors.emplace_back();
    }
    return {it->second, fresh};
  };
  auto finish = [&]() {
    compute_stats(clan, catalog);
    return clan;
  };

  std::sort(roots.begin(), roots.end(), precedes);
  std::vector<std::uint32_t> current;
  for (const auto& r : roots) {
    auto [i, fresh] = intern(r, 1);
    if (!fresh) continue;
    current.push_back(i);
    if (admit(r)) {
      clan.n_roots = clan.cylinders.size();
      return finish();
    }
  }
  clan.n_roots = clan.cylinders.size();

  for (std::uint32_t gen = 1; !current.empty(); ++gen) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t i : current) {
      const Cylinder c = clan.cylinders[i];
      for (const auto& a : first_generation(source, c, opt.strict_births)) {
        auto [j, fresh] = intern(a, gen + 1);
        clan.ancestors[i].push_back(j);
        if (!fresh) continue;
        next.push_back(j);
        if (admit(a)) return finish();
      }
    }
    std::sort(next.begin(), next.end(),
              [&](std::uint32_t a, std::uint32_t b) { return precedes(clan.cylinders[a], clan.cylinders[b]); });
    current = std::move(next);
  }
  return finish();
}

Clan clan_of_point(CylinderSource& source, const Site& x, double t, const ClanLimits& limits) {
  ExploreOptions opt;
  opt.center = x;
  opt.t_ref = t;
  opt.limits = limits;
  if (!opt.limits.max_radius) opt.limits.max_radius = source.catalog().region().half_width();
  return explore(source, covering(source, x, t), opt);
}

Clan clan_of_point(const Environment& env, const Site& x, double t, const ClanLimits& limits, std::uint64_t seed) {
  FreeProcess fp(env, seed, t);
  return clan_of_point(fp, x, t, limits);
}

KeepErasePartition keep_erase(const Clan& clan, const AnimalCatalog& catalog) {
  if (clan.status != ClanStatus::closed || clan.stopped) throw ContractViolation("keep_erase needs a closed clan");
  const auto n = static_cast<std::uint32_t>(clan.cylinders.size());
  std::vector<std::uint32_t> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = i;
  // Ancestors always precede, so birth order visits every ancestor first.
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return precedes(clan.cylinders[a], clan.cylinders[b]); });
  KeepErasePartition part;
  part.is_kept.assign(n, false);
  std::vector<const Animal*> present;
  for (std::uint32_t i : order) {
    const Cylinder& c = clan.cylinders[i];
    bool keep = true;
    if (!clan.ancestors[i].empty()) {
      present.clear();
      for (std::uint32_t j : clan.ancestors[i])
        if (part.is_kept[j]) present.push_back(&catalog.animal(clan.cylinders[j].animal));
      keep = c.mark <= catalog.model().acceptance(catalog.animal(c.animal), present);
    }
    part.is_kept[i] = keep;
  }
  for (std::uint32_t i = 0; i < n; ++i) (part.is_kept[i] ? part.kept : part.erased).push_back(i);
  return part;
}

PerfectSample perfect_sample(const Environment& env, const Region& lambda, const ClanLimits& limits, std::uint64_t seed) {
  if (!env.region().contains(lambda)) throw RegionMarginError("sampling region must lie inside the environment window");
  FreeProcess fp(env, seed, 0.0);
  std::vector<Cylinder> roots;
  for (AnimalId id : env.catalog().animals_within(lambda)) fp.alive_at(id, 0.0, roots);
  ExploreOptions opt;
  opt.t_ref = 0.0;
  opt.limits = limits;
  for (int i = 0; i < lambda.dim(); ++i) opt.center.c[i] = (lambda.lo().c[i] + lambda.hi().c[i]) / 2;
  const Clan clan = explore(fp, std::move(roots), opt);
  PerfectSample out;
  out.status = clan.status;
  out.clan_size = clan.cylinders.size();
  out.required_enlargement = clan.escape_deficit;
  if (clan.status != ClanStatus::closed) return out;
  const auto part = keep_erase(clan, env.catalog());
  std::map<AnimalId, int> counts;
  for (std::uint32_t i = 0; i < clan.n_roots; ++i)
    if (part.is_kept[i]) ++counts[clan.cylinders[i].animal];
  out.animals.assign(counts.begin(), counts.end());
  return out;
}

TailTable clan_tail_estimates(const Environment& env, const Site& x, const TailThresholds& th, std::size_t replicas,
                              std::uint64_t seed, const ClanLimits& limits, unsigned workers) {
  if (replicas < 100) throw std::invalid_argument("clan tail estimates need at least 100 replicas");
  const auto results = parallel_map(replicas, workers, [&](std::size_t r) {
    const Clan c = clan_of_point(env, x, 0.0, limits, derive_seed(seed, StreamTag::clan, r));
    return std::make_pair(c.status, c.stats);
  });
  TailTable t;
  t.replicas = replicas;
  std::vector<ClanStats> closed;
  std::vector<double> ss;
  for (const auto& [status, stats] : results) {
    if (status == ClanStatus::closed) {
      closed.push_back(stats);
      ss.push_back(static_cast<double>(stats.ss));
    } else if (status == ClanStatus::budget_exceeded) {
      ++t.budget_exceeded;
    } else {
      ++t.escaped;
    }
  }
  t.closed = closed.size();
  for (int L : th.L) {
    const auto k = static_cast<std::size_t>(std::count_if(closed.begin(), closed.end(), [&](const ClanStats& s) { return s.sd > L; }));
    TailRow row{static_cast<double>(L), proportion_estimate(k, closed.size())};
    row.estimate.excluded = replicas - closed.size();
    t.sd.push_back(row);
  }
  for (double T : th.T) {
    const auto k = static_cast<std::size_t>(std::count_if(closed.begin(), closed.end(), [&](const ClanStats& s) { return s.tl > T; }));
    TailRow row{T, proportion_estimate(k, closed.size())};
    row.estimate.excluded = replicas - closed.size();
    t.tl.push_back(row);
  }
  t.ss_mean = mean_estimate(ss);
  t.ss_mean.excluded = replicas - closed.size();
  return t;
}

}  // namespace clansim

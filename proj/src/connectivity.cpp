#include "clansim/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "clansim/errors.hpp"
#include "clansim/parallel.hpp"

namespace clansim {

namespace {

ExploreOptions window_options(const SpaceTimePoint& X) {
  ExploreOptions opt;
  opt.center = X.x;
  opt.t_ref = X.t;
  opt.limits.region_is_wall = true;
  opt.limits.max_cylinders = std::numeric_limits<std::size_t>::max();
  opt.truncation_is_escape = false;
  opt.strict_births = true;
  return opt;
}

Clan clan_in_window(CylinderSource& src, const SpaceTimePoint& X, std::function<bool(const Cylinder&)> visit) {
  ExploreOptions opt = window_options(X);
  opt.visit = std::move(visit);
  return explore(src, covering(src, X.x, X.t), opt);
}

// Lebesgue measure of a union of intervals.
double union_length(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  double total = 0.0, lo = 0.0, hi = 0.0;
  bool open = false;
  for (const auto& [a, b] : iv) {
    if (!open || a > hi) {
      if (open) total += hi - lo;
      lo = a;
      hi = b;
      open = true;
    } else {
      hi = std::max(hi, b);
    }
  }
  if (open) total += hi - lo;
  return total;
}

bool connected_in(CylinderSource& src, const SpaceTimePoint& X, const SpaceTimePoint& Y) {
  const auto& cat = src.catalog();
  const Clan clan = clan_in_window(src, X, [&](const Cylinder& c) { return c.alive_at(Y.t) && cat.animal(c.animal).contains(Y.x); });
  return clan.stopped;
}

double boundary_value(CylinderSource& src, const Site& x, double L, double T, double delta) {
  const int d = src.catalog().region().dim();
  Box box{{x, 0.0}, L, T, delta};
  const Region outer = box.outer(d);
  const double bottom = box.bottom();
  std::map<Site, bool> bottom_hit;
  std::map<Site, std::vector<std::pair<double, double>>> shell_lives;
  clan_in_window(src, {x, 0.0}, [&](const Cylinder& c) {
    for (const Site& s : src.catalog().animal(c.animal).support) {
      if (!outer.contains(s)) continue;
      if (c.alive_at(bottom)) bottom_hit[s] = true;
      if (box.in_shell(d, s)) {
        const double a = std::max(c.birth, bottom), b = std::min(c.death(), 0.0);
        if (b > a) shell_lives[s].emplace_back(a, b);
      }
    }
    return false;
  });
  double total = static_cast<double>(bottom_hit.size());
  for (auto& [s, iv] : shell_lives) total += union_length(std::move(iv));
  return total;
}

}  // namespace

bool connected(const CylinderConfiguration& config, const SpaceTimePoint& X, const SpaceTimePoint& Y) {
  if (Y.t > X.t) throw std::invalid_argument("connected needs t_Y <= t_X");
  for (const auto* P : {&X, &Y})
    if (!config.region.contains(P->x) || P->t < config.t0 || P->t > config.t1)
      throw std::invalid_argument("connectivity point outside the configuration window");
  ConfigurationSource src(config);
  return connected_in(src, X, Y);
}

std::optional<bool> connected_disjointly(const CylinderConfiguration& config, const SpaceTimePoint& X1, const SpaceTimePoint& Y1,
                                         const SpaceTimePoint& X2, const SpaceTimePoint& Y2, std::size_t max_paths) {
  if (Y1.t > X1.t || Y2.t > X2.t) throw std::invalid_argument("connected_disjointly needs t_Y <= t_X");
  const auto& cyl = config.cylinders;
  const std::size_t n = cyl.size();
  const auto& cat = *config.catalog;
  // Edge i -> j: j is an ancestor of i with a strictly earlier birth.
  std::vector<std::vector<std::size_t>> next(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!(cyl[j].birth < cyl[i].birth) || !cyl[j].alive_at(cyl[i].birth)) continue;
      const auto inc = cat.incompatible_with(cyl[i].animal);
      if (std::find(inc.begin(), inc.end(), cyl[j].animal) != inc.end()) next[i].push_back(j);
    }
  auto covers = [&](std::size_t i, const SpaceTimePoint& P) { return cyl[i].alive_at(P.t) && cat.animal(cyl[i].animal).contains(P.x); };

  auto reachable = [&](const SpaceTimePoint& X, const SpaceTimePoint& Y, const std::vector<bool>& blocked) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < n; ++i)
      if (!blocked[i] && covers(i, X)) {
        seen[i] = true;
        stack.push_back(i);
      }
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      if (covers(i, Y)) return true;
      for (std::size_t j : next[i])
        if (!blocked[j] && !seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
    }
    return false;
  };

  // Nodes that can still reach a cylinder covering Y1.
  std::vector<bool> useful(n, false);
  for (std::size_t k = 0; k < n; ++k) {  // births ascending, so ancestors come first
    useful[k] = covers(k, Y1);
    for (std::size_t j : next[k]) useful[k] = useful[k] || useful[j];
  }

  std::vector<bool> on_path(n, false);
  std::size_t paths = 0;
  bool overflow = false;
  std::function<bool(std::size_t)> dfs = [&](std::size_t i) -> bool {
    on_path[i] = true;
    if (covers(i, Y1)) {
      if (++paths > max_paths) {
        overflow = true;
      } else if (reachable(X2, Y2, on_path)) {
        return true;
      }
    }
    if (!overflow)
      for (std::size_t j : next[i])
        if (useful[j] && dfs(j)) return true;
    on_path[i] = false;
    return false;
  };
  for (std::size_t i = 0; i < n && !overflow; ++i)
    if (useful[i] && covers(i, X1) && dfs(i)) return true;
  if (overflow) return std::nullopt;
  return false;
}

ConnectivityEstimate estimate_G(const Environment& env, const SpaceTimePoint& X, const SpaceTimePoint& Y, const std::optional<Box>& box,
                                std::size_t replicas, std::uint64_t seed, const ClanLimits& limits, unsigned workers,
                                double confidence) {
  if (replicas < 100) throw std::invalid_argument("estimate_G needs at least 100 replicas");
  if (Y.t > X.t) throw std::invalid_argument("estimate_G needs t_Y <= t_X");
  const int d = env.model().dim();
  if (box) {
    const Region r = box->inner(d);
    if (!env.region().contains(r)) throw RegionMarginError("box does not fit in the environment window");
  }
  enum Outcome : int { no = 0, yes = 1, unresolved = 2 };
  const auto outcomes = parallel_map(replicas, workers, [&](std::size_t i) -> int {
    const std::uint64_t s = derive_seed(seed, StreamTag::connectivity, i);
    if (box) {
      const Region inner = box->inner(d);
      if (!inner.contains(X.x) || !inner.contains(Y.x) || X.t > box->center.t || Y.t < box->bottom()) return no;
      BoxedSource src(env, inner, box->bottom(), box->center.t, s);
      return connected_in(src, X, Y) ? yes : no;
    }
    if (!env.region().contains(X.x)) throw std::invalid_argument("X lies outside the environment window");
    FreeProcess fp(env, s, X.t);
    ExploreOptions opt;
    opt.center = X.x;
    opt.t_ref = X.t;
    opt.limits = limits;
    if (!opt.limits.max_radius) opt.limits.max_radius = env.region().half_width();
    opt.strict_births = true;
    opt.visit = [&](const Cylinder& c) { return c.alive_at(Y.t) && env.catalog().animal(c.animal).contains(Y.x); };
    const Clan clan = explore(fp, covering(fp, X.x, X.t), opt);
    if (clan.stopped) return yes;
    return clan.status == ClanStatus::closed ? no : unresolved;
  });
  ConnectivityEstimate out;
  std::size_t hits = 0;
  for (int o : outcomes) {
    if (o != no) ++hits;
    if (o == unresolved) ++out.unresolved;
  }
  out.estimate = proportion_estimate(hits, replicas, confidence);
  return out;
}

double boundary_functional(const CylinderConfiguration& config, const Site& x, double L, double T, double delta) {
  ConfigurationSource src(config);
  return boundary_value(src, x, L, T, delta);
}

Estimate boundary_sum(const Environment& env, const Site& x, double L, double T, std::size_t replicas, std::uint64_t seed,
                      unsigned workers, double confidence) {
  if (!(L > 0) || !(T > 0)) throw std::invalid_argument("boundary_sum needs L > 0 and T > 0");
  if (replicas < 2) throw std::invalid_argument("boundary_sum needs at least two replicas");
  const int d = env.model().dim();
  const double delta = env.model().geometry().delta;
  const Region outer = Region::ball(d, x, L + delta);
  if (!env.region().contains(outer)) throw RegionMarginError("Λ[x;L+δ] exceeds the environment window");
  const auto values = parallel_map(replicas, workers, [&](std::size_t i) {
    BoxedSource src(env, outer, -T, 0.0, derive_seed(seed, StreamTag::connectivity, i));
    return boundary_value(src, x, L, T, delta);
  });
  return mean_estimate(values, confidence);
}

std::string to_string(Regularity r) {
  switch (r) {
    case Regularity::regular: return "regular";
    case Regularity::singular: return "singular";
    case Regularity::inconclusive: return "inconclusive";
  }
  return "?";
}

RegularityVerdict is_regular(const Environment& env, const Site& x, double m, double L, const std::function<double(double)>& T_fn,
                             std::size_t replicas, double confidence, std::uint64_t seed, unsigned workers) {
  if (!(m > 0)) throw std::invalid_argument("regularity needs m > 0");
  if (!(L > 1)) throw std::invalid_argument("regularity needs L > 1");
  RegularityVerdict v;
  v.site = x;
  v.m = m;
  v.L = L;
  v.T = T_fn(L);
  const double delta = env.model().geometry().delta;
  v.threshold = std::exp(-m * (L + delta));
  v.estimate = boundary_sum(env, x, L, v.T, replicas, seed, workers, confidence);
  if (v.estimate.ci_high <= v.threshold)
    v.verdict = Regularity::regular;
  else if (v.estimate.ci_low > v.threshold)
    v.verdict = Regularity::singular;
  else
    v.verdict = Regularity::inconclusive;
  return v;
}

double regular_path_bound(const Site& x, const Site& y, double t_X, double t_Y, double L, double T, double delta, double m,
                          double dist_to_complement) {
  if (!(m > 0) || !(L > 0) || !(T > 0)) throw std::invalid_argument("regular_path_bound needs m, L, T > 0");
  const double scale = L + delta;
  const double ratio = std::min(dist_to_complement / scale,
                                std::max(static_cast<double>(sup_distance(x, y)) / scale, std::abs(t_X - t_Y) / T));
  const double N = std::floor(ratio + 1e-12);
  return std::exp(-m * scale * N);
}

}  // namespace clansim

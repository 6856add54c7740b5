#include "clansim/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "clansim/models.hpp"
#include "clansim/parallel.hpp"

namespace clansim {

namespace {

void need(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::uint64_t u(int v) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(v)); }

double draw(const Marginal& m, std::uint64_t seed, int slot, const Site& s) {
  Stream rng(stream_key(seed, {static_cast<std::uint64_t>(StreamTag::disorder), static_cast<std::uint64_t>(slot), u(s.c[0]), u(s.c[1]), u(s.c[2])}));
  return m.sample(rng);
}

void check_region(const Environment& env, const Region& region) {
  if (region.empty()) throw std::invalid_argument("diagnostic region is empty");
  if (!env.region().contains(region)) throw std::invalid_argument("diagnostic region must lie inside the environment window");
}

nlohmann::json region_json(const Region& r) {
  nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
  for (int i = 0; i < r.dim(); ++i) {
    lo.push_back(r.lo().c[i]);
    hi.push_back(r.hi().c[i]);
  }
  return {{"lo", lo}, {"hi", hi}};
}

nlohmann::json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"n", e.n}, {"non_finite", e.non_finite}};
}

}  // namespace

Marginal Marginal::degenerate(double value) {
  Marginal m{Family::degenerate, {value}};
  m.validate();
  return m;
}
Marginal Marginal::uniform(double lo, double hi) {
  Marginal m{Family::uniform, {lo, hi}};
  m.validate();
  return m;
}
Marginal Marginal::exponential(double rate) {
  Marginal m{Family::exponential, {rate}};
  m.validate();
  return m;
}
Marginal Marginal::lognormal(double mu, double sigma) {
  Marginal m{Family::lognormal, {mu, sigma}};
  m.validate();
  return m;
}
Marginal Marginal::bernoulli_mixture(double low, double high, double p) {
  Marginal m{Family::bernoulli_mixture, {low, high, p}};
  m.validate();
  return m;
}

Marginal Marginal::from_name(const std::string& name, const std::vector<double>& p) {
  auto arity = [&](std::size_t n) { need(p.size() == n, "distribution '" + name + "' takes " + std::to_string(n) + " parameter(s)"); };
  if (name == "degenerate") {
    arity(1);
    return degenerate(p[0]);
  }
  if (name == "uniform") {
    arity(2);
    return uniform(p[0], p[1]);
  }
  if (name == "exponential") {
    arity(1);
    return exponential(p[0]);
  }
  if (name == "lognormal") {
    arity(2);
    return lognormal(p[0], p[1]);
  }
  if (name == "bernoulli_mixture") {
    arity(3);
    return bernoulli_mixture(p[0], p[1], p[2]);
  }
  throw std::invalid_argument("unknown distribution '" + name + "'");
}

void Marginal::validate() const {
  for (double v : params) need(std::isfinite(v), "distribution parameters must be finite");
  switch (family) {
    case Family::degenerate: need(params.size() == 1, "degenerate takes one parameter"); break;
    case Family::uniform: need(params.size() == 2 && params[0] <= params[1], "uniform needs lo <= hi"); break;
    case Family::exponential: need(params.size() == 1 && params[0] > 0, "exponential needs a positive rate"); break;
    case Family::lognormal: need(params.size() == 2 && params[1] >= 0, "lognormal needs a nonnegative scale"); break;
    case Family::bernoulli_mixture:
      need(params.size() == 3 && params[2] >= 0 && params[2] <= 1, "bernoulli_mixture needs p in [0,1]");
      break;
  }
}

double Marginal::sample(Stream& rng) const {
  switch (family) {
    case Family::degenerate: return params[0];
    case Family::uniform: return params[0] + (params[1] - params[0]) * rng.uniform();
    case Family::exponential: return rng.exponential(params[0]);
    case Family::lognormal: return std::exp(params[0] + params[1] * rng.normal());
    case Family::bernoulli_mixture: return rng.uniform() < params[2] ? params[1] : params[0];
  }
  return 0.0;
}

std::string Marginal::name() const {
  switch (family) {
    case Family::degenerate: return "degenerate";
    case Family::uniform: return "uniform";
    case Family::exponential: return "exponential";
    case Family::lognormal: return "lognormal";
    case Family::bernoulli_mixture: return "bernoulli_mixture";
  }
  return "?";
}

nlohmann::json Marginal::to_json() const { return {{"distribution", name()}, {"params", params}}; }

void DisorderSpec::validate() const {
  site.validate();
  link.validate();
  need(std::isfinite(scale) && scale >= 0, "rate scale must be finite and nonnegative");
  for (double w : kind_weights) need(std::isfinite(w) && w >= 0, "kind weights must be finite and nonnegative");
  need(rate_map != RateMap::random_cluster || kind == DisorderKind::site_link, "random_cluster rates need site-link disorder");
}

nlohmann::json DisorderSpec::to_json() const {
  const char* maps[] = {"product", "mean", "random_cluster"};
  nlohmann::json j = {{"kind", kind == DisorderKind::site ? "site" : "site_link"},
                      {"site", site.to_json()},
                      {"rate_map", maps[static_cast<int>(rate_map)]},
                      {"scale", scale},
                      {"kind_weights", kind_weights}};
  if (kind == DisorderKind::site_link) j["link"] = link.to_json();
  return j;
}

std::uint64_t DisorderSpec::hash() const { return fnv1a64(to_json().dump()); }

Environment Environment::sample(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, std::uint64_t seed) {
  spec.validate();
  Environment env;
  env.catalog_ = std::move(catalog);
  env.spec_ = spec;
  env.seed_ = seed;
  const int d = env.model().dim();
  env.value_region_ = env.region().dilated(env.model().geometry().ell1);
  const std::size_t n = env.value_region_.size();
  env.site_values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) env.site_values_[i] = draw(spec.site, seed, 0, env.value_region_.site_at(i));
  if (spec.kind == DisorderKind::site_link) {
    env.link_values_.resize(n * d);
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < d; ++a) env.link_values_[i * d + a] = draw(spec.link, seed, 1 + a, env.value_region_.site_at(i));
  }
  env.derive_rates();
  return env;
}

Environment Environment::sample(ModelPtr model, const DisorderSpec& spec, const Region& region, std::uint64_t seed) {
  return sample(std::make_shared<const AnimalCatalog>(std::move(model), region), spec, seed);
}

void Environment::derive_rates() {
  const auto& cat = *catalog_;
  rates_.assign(cat.size(), 0.0);
  std::vector<double> sv, lv;
  for (AnimalId id = 0; id < cat.size(); ++id) {
    const Animal& a = cat.animal(id);
    sv.clear();
    lv.clear();
    for (const auto& s : a.support) sv.push_back(site_value(s));
    if (spec_.kind == DisorderKind::site_link)
      for (const auto& l : a.links) lv.push_back(link_value(l));
    double w = 0.0;
    switch (spec_.rate_map) {
      case RateMap::product:
        w = std::accumulate(sv.begin(), sv.end(), 1.0, std::multiplies<>());
        w = std::accumulate(lv.begin(), lv.end(), w, std::multiplies<>());
        break;
      case RateMap::mean: {
        const double sum = std::accumulate(sv.begin(), sv.end(), 0.0) + std::accumulate(lv.begin(), lv.end(), 0.0);
        w = sum / static_cast<double>(sv.size() + lv.size());
        break;
      }
      case RateMap::random_cluster: w = random_cluster_weight(sv, lv); break;
    }
    const double kw = static_cast<std::size_t>(a.kind) < spec_.kind_weights.size() ? spec_.kind_weights[a.kind] : 1.0;
    w *= spec_.scale * kw;
    if (std::isnan(w) || w < 0) throw std::invalid_argument("disorder produced a negative or undefined birth rate");
    rates_[id] = w;
  }
}

double Environment::total_rate() const { return std::accumulate(rates_.begin(), rates_.end(), 0.0); }

double Environment::site_value(const Site& s) const {
  if (!value_region_.contains(s)) throw std::out_of_range("site outside the disorder window");
  return site_values_[value_region_.index(s)];
}

double Environment::link_value(const Link& l) const {
  if (link_values_.empty()) throw std::logic_error("environment has no link disorder");
  const Site diff = l.b - l.a;
  int axis = -1;
  for (int i = 0; i < model().dim(); ++i)
    if (diff == Site::unit(i)) axis = i;
  if (axis < 0) throw std::invalid_argument("only nearest-neighbour links carry disorder");
  if (!value_region_.contains(l.a)) throw std::out_of_range("link outside the disorder window");
  return link_values_[value_region_.index(l.a) * model().dim() + axis];
}

Environment Environment::scaled(double c) const {
  if (!(c >= 0) || !std::isfinite(c)) throw std::invalid_argument("scale factor must be finite and nonnegative");
  Environment e = *this;
  for (auto& r : e.rates_) r *= c;
  e.spec_.scale *= c;
  return e;
}

Environment Environment::with_rates(std::vector<double> rates) const {
  if (rates.size() != rates_.size()) throw std::invalid_argument("with_rates needs one rate per catalog animal");
  for (double r : rates)
    if (std::isnan(r) || r < 0) throw std::invalid_argument("rates must be nonnegative");
  Environment e = *this;
  e.rates_ = std::move(rates);
  return e;
}

nlohmann::json Environment::snapshot() const {
  return {{"format", "clansim-environment"},
          {"version", 1},
          {"model", model().name()},
          {"spec", spec_.to_json()},
          {"spec_hash", spec_.hash()},
          {"seed", seed_},
          {"region", region_json(region())},
          {"site_values", site_values_},
          {"link_values", link_values_}};
}

Environment Environment::from_snapshot(const nlohmann::json& snap, std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec) {
  if (snap.value("format", "") != "clansim-environment" || snap.value("version", 0) != 1)
    throw std::invalid_argument("not a version-1 environment snapshot");
  if (snap.at("spec_hash").get<std::uint64_t>() != spec.hash()) throw std::invalid_argument("snapshot was produced by a different disorder spec");
  if (snap.at("region") != region_json(catalog->region())) throw std::invalid_argument("snapshot window differs from catalog window");
  Environment env;
  env.catalog_ = std::move(catalog);
  env.spec_ = spec;
  env.seed_ = snap.at("seed").get<std::uint64_t>();
  env.value_region_ = env.region().dilated(env.model().geometry().ell1);
  env.site_values_ = snap.at("site_values").get<std::vector<double>>();
  env.link_values_ = snap.at("link_values").get<std::vector<double>>();
  if (env.site_values_.size() != env.value_region_.size()) throw std::invalid_argument("snapshot has the wrong number of site values");
  env.derive_rates();
  return env;
}

SizeFunction default_size(const AnimalModel& model) {
  return [&model](const Animal& a) { return model.size(a); };
}

double upsilon(const Environment& env, const Region& region) {
  check_region(env, region);
  double best = 0.0;
  region.for_each([&](const Site& x) {
    double s = 0.0;
    for (AnimalId id : env.catalog().containing(x)) s += env.rate(id);
    best = std::max(best, s);
  });
  return best;
}

namespace {
double checked_size(const SizeFunction& size, const Animal& a) {
  const double s = size(a);
  if (!(s >= 1.0)) throw std::invalid_argument("size function must be >= 1");
  return s;
}
}  // namespace

double psi(const Environment& env, const SizeFunction& size, const Region& region) {
  check_region(env, region);
  const auto& cat = env.catalog();
  double best = 0.0;
  for (AnimalId g = 0; g < cat.size(); ++g) {
    const Animal& a = cat.animal(g);
    if (!region.contains_all(a.support)) continue;
    double s = 0.0;
    for (AnimalId t : cat.incompatible_with(g)) s += checked_size(size, cat.animal(t)) * env.rate(t);
    best = std::max(best, s / checked_size(size, a));
  }
  return best;
}

double xi(const Environment& env, const Region& region) {
  check_region(env, region);
  double best = 0.0;
  region.for_each([&](const Site& x) {
    double s = 0.0;
    for (AnimalId id : env.catalog().containing(x)) s += static_cast<double>(env.catalog().halo(id).size()) * env.rate(id);
    best = std::max(best, s);
  });
  return best;
}

HaloRatios halo_ratios(const Environment& env, const SizeFunction& size, const Region& region) {
  check_region(env, region);
  const auto& cat = env.catalog();
  HaloRatios r{std::numeric_limits<double>::infinity(), 0.0};
  for (AnimalId g = 0; g < cat.size(); ++g) {
    const Animal& a = cat.animal(g);
    if (!region.contains_all(a.support)) continue;
    const double v = static_cast<double>(cat.halo(g).size()) / checked_size(size, a);
    r.u1 = std::min(r.u1, v);
    r.u2 = std::max(r.u2, v);
  }
  if (!std::isfinite(r.u1)) r.u1 = 0.0;
  return r;
}

DisorderDiagnostics diagnose(const Environment& env, const SizeFunction& size, const Region& region) {
  DisorderDiagnostics d;
  d.upsilon = upsilon(env, region);
  d.psi = psi(env, size, region);
  d.xi = xi(env, region);
  const auto h = halo_ratios(env, size, region);
  d.u1 = h.u1;
  d.u2 = h.u2;
  return d;
}

double a_threshold(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  const double dd = d;
  return 2 * dd * dd * (1 + std::sqrt(1 + 1 / dd) + 1 / (2 * dd));
}

Estimate aleph_estimate(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, double a, const Region& region,
                        std::size_t replicas, std::uint64_t seed, unsigned workers) {
  if (!(a > 0)) throw std::invalid_argument("aleph exponent must be positive");
  if (replicas < 2) throw std::invalid_argument("aleph estimate needs at least two replicas");
  const auto values = parallel_map(replicas, workers, [&](std::size_t r) {
    const auto env = Environment::sample(catalog, spec, derive_seed(seed, StreamTag::replica, r));
    return std::pow(std::log1p(upsilon(env, region)), a);
  });
  return mean_estimate(values);
}

nlohmann::json HypothesisReport::to_json() const {
  return {{"d", d},
          {"a_threshold", a_threshold},
          {"a", a},
          {"epsilon", epsilon},
          {"aleph", estimate_json(aleph)},
          {"aleph_pass", aleph_pass},
          {"psi_mean", estimate_json(psi)},
          {"psi_pass", psi_pass},
          {"xi_mean", estimate_json(xi)},
          {"u1", u1},
          {"u2", u2},
          {"corollary_pass", corollary_pass},
          {"window", window},
          {"note", "suprema restricted to the window; values are lower bounds of the infinite-volume suprema"}};
}

HypothesisReport check_hypotheses(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, const SizeFunction& size,
                                  double epsilon, const Region& region, std::size_t replicas, std::uint64_t seed,
                                  std::optional<double> a, unsigned workers) {
  if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be positive");
  HypothesisReport rep;
  rep.d = catalog->model().dim();
  rep.a_threshold = a_threshold(rep.d);
  rep.a = a.value_or(1.01 * rep.a_threshold);
  rep.epsilon = epsilon;
  rep.window = region.str();
  replicas = std::max<std::size_t>(replicas, 2);
  struct Row {
    double aleph, psi, xi, u1, u2;
  };
  const auto rows = parallel_map(replicas, workers, [&](std::size_t r) {
    const auto env = Environment::sample(catalog, spec, derive_seed(seed, StreamTag::replica, r));
    const auto dg = diagnose(env, size, region);
    return Row{std::pow(std::log1p(dg.upsilon), rep.a), dg.psi, dg.xi, dg.u1, dg.u2};
  });
  std::vector<double> al, ps, xs;
  for (const auto& r : rows) {
    al.push_back(r.aleph);
    ps.push_back(r.psi);
    xs.push_back(r.xi);
  }
  rep.aleph = mean_estimate(al);
  rep.psi = mean_estimate(ps);
  rep.xi = mean_estimate(xs);
  rep.u1 = rows.front().u1;
  rep.u2 = rows.front().u2;
  rep.aleph_pass = rep.a > rep.a_threshold && rep.aleph.non_finite == 0 && std::isfinite(rep.aleph.ci_high);
  rep.psi_pass = rep.psi.non_finite == 0 && rep.psi.ci_high <= epsilon;
  rep.corollary_pass = rep.aleph_pass && rep.u1 > 0 && std::isfinite(rep.u2) && rep.xi.non_finite == 0 && rep.xi.ci_high <= epsilon;
  return rep;
}

}  // namespace clansim

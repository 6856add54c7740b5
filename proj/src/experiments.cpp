#include "clansim/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "clansim/connectivity.hpp"
#include "clansim/errors.hpp"
#include "clansim/multiscale.hpp"
#include "clansim/parallel.hpp"

namespace clansim {

using nlohmann::json;

namespace {

// Object reader that remembers which keys were consumed and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
    if (!j.is_object()) throw ConfigError(ptr_.empty() ? "/" : ptr_, "expected an object");
  }

  std::string at(const std::string& key) const { return ptr_ + "/" + key; }
  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key), "missing required field");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = raw(key);
    return convert<T>(v, at(key));
  }
  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ConfigError(where, "expected a nonnegative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(where, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where, "expected a string");
    }
    return v.get<T>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string ptr_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where, what);
}

Site parse_site(const json& v, int dim, const std::string& where) {
  require(v.is_array() && static_cast<int>(v.size()) == dim, where, "expected an array of " + std::to_string(dim) + " integers");
  Site s{};
  for (int i = 0; i < dim; ++i) s.c[i] = Reader::convert<int>(v[i], where + "/" + std::to_string(i));
  return s;
}

json site_json(const Site& s, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(s.c[i]);
  return a;
}

std::vector<Site> parse_sites(const json& v, int dim, const std::string& where) {
  require(v.is_array(), where, "expected an array of sites");
  std::vector<Site> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_site(v[i], dim, where + "/" + std::to_string(i)));
  return out;
}

Region parse_region(const json& j, int dim, const std::string& where) {
  Reader r(j, where);
  Region out;
  if (r.has("center")) {
    require(!r.has("lo") && !r.has("hi"), where, "give either center/radius or lo/hi");
    const Site c = parse_site(r.raw("center"), dim, r.at("center"));
    const double rad = r.get<double>("radius");
    require(rad >= 0, r.at("radius"), "radius must be >= 0");
    out = Region::ball(dim, c, rad);
  } else {
    out = Region(dim, parse_site(r.raw("lo"), dim, r.at("lo")), parse_site(r.raw("hi"), dim, r.at("hi")));
  }
  r.finish();
  require(!out.empty(), where, "region is empty");
  return out;
}

json region_json(const Region& r) { return {{"lo", site_json(r.lo(), r.dim())}, {"hi", site_json(r.hi(), r.dim())}}; }

std::pair<Profile, json> parse_profile(const json& j, const std::string& where) {
  Reader r(j, where);
  const auto type = r.get<std::string>("type");
  Profile p;
  json norm{{"type", type}};
  try {
    if (type == "free") {
      p = Profile::free();
    } else if (type == "hardcore") {
      p = Profile::hardcore();
    } else if (type == "geometric") {
      const double beta = r.get<double>("beta");
      p = Profile::geometric(beta);
      norm["beta"] = beta;
    } else if (type == "table") {
      const json& v = r.raw("values");
      require(v.is_array() && !v.empty(), r.at("values"), "expected a nonempty array of numbers");
      std::vector<double> vals;
      for (std::size_t i = 0; i < v.size(); ++i) vals.push_back(Reader::convert<double>(v[i], r.at("values") + "/" + std::to_string(i)));
      p = Profile::from_table(vals);
      norm["values"] = vals;
    } else {
      throw ConfigError(r.at("type"), "unknown profile type '" + type + "' (free, hardcore, geometric, table)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
  r.finish();
  return {p, norm};
}

std::pair<ModelPtr, json> parse_model(const json& j, const std::string& where) {
  Reader r(j, where);
  const auto name = r.get<std::string>("name");
  const int dim = r.get<int>("dim", 1);
  require(dim >= 1 && dim <= 3, r.at("dim"), "dim must be 1, 2 or 3");
  json norm{{"name", name}, {"dim", dim}};
  ModelPtr model;
  try {
    if (name == "monomer") {
      const int kinds = r.get<int>("kinds", 1);
      require(kinds >= 1, r.at("kinds"), "kinds must be >= 1");
      norm["kinds"] = kinds;
      model = make_monomer_model(dim, kinds);
    } else if (name == "domino") {
      model = make_domino_model(dim);
    } else if (name == "exclusion") {
      const json& shapes = r.raw("shapes");
      require(shapes.is_array() && !shapes.empty(), r.at("shapes"), "expected a nonempty array of shapes");
      std::vector<std::vector<Site>> sh;
      json sj = json::array();
      for (std::size_t i = 0; i < shapes.size(); ++i) {
        sh.push_back(parse_sites(shapes[i], dim, r.at("shapes") + "/" + std::to_string(i)));
        require(!sh.back().empty(), r.at("shapes") + "/" + std::to_string(i), "shape must be nonempty");
        json one = json::array();
        for (const auto& s : sh.back()) one.push_back(site_json(s, dim));
        sj.push_back(one);
      }
      const int kinds = r.get<int>("kinds", 1);
      require(kinds >= 1, r.at("kinds"), "kinds must be >= 1");
      norm["shapes"] = sj;
      norm["kinds"] = kinds;
      model = make_exclusion_model(dim, sh, kinds);
    } else if (name == "area_interaction") {
      std::vector<Site> grain{Site{}};
      if (r.has("grain")) grain = parse_sites(r.raw("grain"), dim, r.at("grain"));
      require(!grain.empty(), r.at("grain"), "grain must be nonempty");
      auto [f, fj] = r.has("profile") ? parse_profile(r.raw("profile"), r.at("profile")) : std::pair{Profile::hardcore(), json{{"type", "hardcore"}}};
      json gj = json::array();
      for (const auto& s : grain) gj.push_back(site_json(s, dim));
      norm["grain"] = gj;
      norm["profile"] = fj;
      model = make_area_interaction_model(dim, grain, f);
    } else if (name == "strauss") {
      const int rr = r.get<int>("r", 1);
      require(rr >= 1, r.at("r"), "r must be >= 1");
      auto [f, fj] = r.has("penalty") ? parse_profile(r.raw("penalty"), r.at("penalty")) : std::pair{Profile::hardcore(), json{{"type", "hardcore"}}};
      norm["r"] = rr;
      norm["penalty"] = fj;
      model = make_strauss_model(dim, rr, f);
    } else if (name == "loss_network") {
      const int max_len = r.get<int>("max_len", 1);
      require(max_len >= 1 && max_len <= 4, r.at("max_len"), "max_len must be in 1..4");
      const int cap = r.get<int>("capacity", 1);
      require(cap >= 0, r.at("capacity"), "capacity must be >= 1, or 0 for unlimited");
      std::map<Link, int> overrides;
      json oj = json::array();
      if (r.has("overrides")) {
        const json& ov = r.raw("overrides");
        require(ov.is_array(), r.at("overrides"), "expected an array");
        for (std::size_t i = 0; i < ov.size(); ++i) {
          const std::string w = r.at("overrides") + "/" + std::to_string(i);
          Reader o(ov[i], w);
          const Site a = parse_site(o.raw("a"), dim, o.at("a"));
          const Site b = parse_site(o.raw("b"), dim, o.at("b"));
          require(sup_distance(a, b) == 1 && std::abs((a - b).c[0]) + std::abs((a - b).c[1]) + std::abs((a - b).c[2]) == 1, w,
                  "override must name a nearest-neighbour link");
          const int c = o.get<int>("capacity");
          require(c >= 0, o.at("capacity"), "capacity must be >= 1, or 0 for unlimited");
          o.finish();
          overrides[Link::make(a, b)] = c;
          oj.push_back({{"a", site_json(a, dim)}, {"b", site_json(b, dim)}, {"capacity", c}});
        }
      }
      norm["max_len"] = max_len;
      norm["capacity"] = cap;
      norm["overrides"] = oj;
      model = make_loss_network_model(dim, max_len, cap, overrides);
    } else if (name == "random_cluster") {
      const int max_links = r.get<int>("max_links", 1);
      require(max_links >= 0 && max_links <= 4, r.at("max_links"), "max_links must be in 0..4");
      norm["max_links"] = max_links;
      model = make_random_cluster_model(dim, max_links);
    } else {
      throw ConfigError(r.at("name"), "unknown model '" + name +
                                          "' (monomer, domino, exclusion, area_interaction, strauss, loss_network, random_cluster)");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
  r.finish();
  return {model, norm};
}

std::pair<Marginal, json> parse_marginal(const json& j, const std::string& where) {
  Reader r(j, where);
  const auto family = r.get<std::string>("family");
  std::vector<double> params;
  if (r.has("params")) {
    const json& v = r.raw("params");
    require(v.is_array(), r.at("params"), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i) params.push_back(Reader::convert<double>(v[i], r.at("params") + "/" + std::to_string(i)));
  }
  r.finish();
  try {
    Marginal m = Marginal::from_name(family, params);
    return {m, {{"family", family}, {"params", params}}};
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
}

std::pair<DisorderSpec, json> parse_disorder(const json& j, const std::string& where) {
  Reader r(j, where);
  DisorderSpec spec;
  const auto kind = r.get<std::string>("kind", "site");
  if (kind == "site")
    spec.kind = DisorderKind::site;
  else if (kind == "site_link")
    spec.kind = DisorderKind::site_link;
  else
    throw ConfigError(r.at("kind"), "unknown disorder kind '" + kind + "' (site, site_link)");
  json norm{{"kind", kind}};
  if (r.has("site")) {
    auto [m, mj] = parse_marginal(r.raw("site"), r.at("site"));
    spec.site = m;
  }
  if (r.has("link")) {
    auto [m, mj] = parse_marginal(r.raw("link"), r.at("link"));
    spec.link = m;
  }
  norm["site"] = {{"family", spec.site.name()}, {"params", spec.site.params}};
  norm["link"] = {{"family", spec.link.name()}, {"params", spec.link.params}};
  const auto map = r.get<std::string>("rate_map", "product");
  if (map == "product")
    spec.rate_map = RateMap::product;
  else if (map == "mean")
    spec.rate_map = RateMap::mean;
  else if (map == "random_cluster")
    spec.rate_map = RateMap::random_cluster;
  else
    throw ConfigError(r.at("rate_map"), "unknown rate map '" + map + "' (product, mean, random_cluster)");
  norm["rate_map"] = map;
  spec.scale = r.get<double>("scale", 1.0);
  require(std::isfinite(spec.scale) && spec.scale >= 0, r.at("scale"), "scale must be finite and >= 0");
  norm["scale"] = spec.scale;
  if (r.has("kind_weights")) {
    const json& v = r.raw("kind_weights");
    require(v.is_array(), r.at("kind_weights"), "expected an array of numbers");
    for (std::size_t i = 0; i < v.size(); ++i)
      spec.kind_weights.push_back(Reader::convert<double>(v[i], r.at("kind_weights") + "/" + std::to_string(i)));
  }
  norm["kind_weights"] = spec.kind_weights;
  r.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where, e.what());
  }
  return {spec, norm};
}

std::vector<double> parse_numbers(const json& v, const std::string& where) {
  require(v.is_array() && !v.empty(), where, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(Reader::convert<double>(v[i], where + "/" + std::to_string(i)));
  return out;
}

Site region_center(const Region& r) {
  Site c{};
  for (int i = 0; i < r.dim(); ++i) c.c[i] = r.lo().c[i] + (r.hi().c[i] - r.lo().c[i]) / 2;
  return c;
}

void limits_params(Reader& r, json& norm) {
  const auto mc = r.get<std::size_t>("max_cylinders", 1'000'000);
  require(mc >= 1, r.at("max_cylinders"), "max_cylinders must be >= 1");
  norm["max_cylinders"] = mc;
  norm["wall"] = r.get<bool>("wall", false);
}

ClanLimits limits_of(const json& p) {
  ClanLimits lim;
  lim.max_cylinders = p.at("max_cylinders").get<std::size_t>();
  lim.region_is_wall = p.at("wall").get<bool>();
  return lim;
}

// Normalized subcommand parameters.
json parse_params(const std::string& command, const json& j, const std::string& where, const ModelPtr& model, const Region& region) {
  Reader r(j, where);
  const int dim = model->dim();
  const double delta = model->geometry().delta;
  json norm = json::object();
  auto site_or_center = [&](const std::string& key) {
    const Site s = r.has(key) ? parse_site(r.raw(key), dim, r.at(key)) : region_center(region);
    require(region.contains(s), r.at(key), "site lies outside the region");
    norm[key] = site_json(s, dim);
    return s;
  };
  if (command == "sample") {
    const Region lambda = r.has("lambda") ? parse_region(r.raw("lambda"), dim, r.at("lambda")) : region;
    require(region.contains(lambda), r.at("lambda"), "lambda must lie inside the region");
    norm["lambda"] = region_json(lambda);
    limits_params(r, norm);
  } else if (command == "clan-stats") {
    site_or_center("x");
    std::vector<double> L{0, 1, 2, 3, 4}, T{0.5, 1, 2, 4, 8};
    if (r.has("L")) L = parse_numbers(r.raw("L"), r.at("L"));
    if (r.has("T")) T = parse_numbers(r.raw("T"), r.at("T"));
    for (double v : L) require(v >= 0 && v == std::floor(v), r.at("L"), "L thresholds must be nonnegative integers");
    for (double v : T) require(v >= 0, r.at("T"), "T thresholds must be >= 0");
    norm["L"] = L;
    norm["T"] = T;
    if (r.has("q")) {
      const double q = r.get<double>("q");
      require(q > 0, r.at("q"), "q must be > 0");
      norm["q"] = q;
    } else {
      const auto feas = feasible_parameters(dim);
      norm["q"] = feas.parameters ? feas.parameters->q : 1.0;
    }
    limits_params(r, norm);
  } else if (command == "connectivity") {
    const Site x = site_or_center("x");
    const double t = r.get<double>("t", 0.0);
    norm["t"] = t;
    json targets = json::array();
    if (r.has("targets")) {
      const json& tj = r.raw("targets");
      require(tj.is_array() && !tj.empty(), r.at("targets"), "expected a nonempty array of {y, t}");
      for (std::size_t i = 0; i < tj.size(); ++i) {
        const std::string w = r.at("targets") + "/" + std::to_string(i);
        Reader o(tj[i], w);
        const Site y = parse_site(o.raw("y"), dim, o.at("y"));
        require(region.contains(y), o.at("y"), "site lies outside the region");
        const double ty = o.get<double>("t");
        require(ty <= t, o.at("t"), "target time must not exceed the source time");
        o.finish();
        targets.push_back({{"y", site_json(y, dim)}, {"t", ty}});
      }
    } else {
      const double dt = r.get<double>("dt", 1.0);
      require(dt >= 0, r.at("dt"), "dt must be >= 0");
      for (int k = 0;; ++k) {
        Site y = x;
        y.c[0] += k;
        if (!region.contains(y) || k > 8) break;
        targets.push_back({{"y", site_json(y, dim)}, {"t", t - dt}});
      }
    }
    norm["targets"] = targets;
    if (r.has("box")) {
      Reader b(r.raw("box"), r.at("box"));
      const double L = b.get<double>("L"), T = b.get<double>("T");
      require(L >= 0, b.at("L"), "L must be >= 0");
      require(T > 0, b.at("T"), "T must be > 0");
      b.finish();
      require(region.contains(Region::ball(dim, x, L)), r.at("box"), "box does not fit in the region");
      norm["box"] = {{"L", L}, {"T", T}};
    }
    limits_params(r, norm);
  } else if (command == "regularity") {
    const double m = r.get<double>("m", 1.0);
    require(m > 0, r.at("m"), "m must be > 0");
    const double L = r.get<double>("L", 2.0);
    require(L > 1, r.at("L"), "L must be > 1");
    norm["m"] = m;
    norm["L"] = L;
    if (r.has("T_nu")) {
      const double nu = r.get<double>("T_nu");
      require(nu > 0 && nu < 1, r.at("T_nu"), "T_nu must be in (0,1)");
      require(!r.has("T"), r.at("T"), "give either T or T_nu");
      norm["T_nu"] = nu;
    } else {
      const double T = r.get<double>("T", 2.0);
      require(T > 0, r.at("T"), "T must be > 0");
      norm["T"] = T;
    }
    std::vector<Site> sites;
    if (r.has("sites")) {
      sites = parse_sites(r.raw("sites"), dim, r.at("sites"));
      require(!sites.empty(), r.at("sites"), "expected at least one site");
    } else {
      sites.push_back(region_center(region));
    }
    json sj = json::array();
    for (std::size_t i = 0; i < sites.size(); ++i) {
      require(region.contains(Region::ball(dim, sites[i], L + delta)), r.at("sites") + "/" + std::to_string(i),
              "Λ[x;L+δ] exceeds the region");
      sj.push_back(site_json(sites[i], dim));
    }
    norm["sites"] = sj;
    if (r.has("R")) {
      const int R = r.get<int>("R");
      require(R >= 1, r.at("R"), "R must be >= 1");
      norm["R"] = R;
    }
    const double conf = r.get<double>("confidence", 0.95);
    require(conf > 0 && conf < 1, r.at("confidence"), "confidence must be in (0,1)");
    norm["confidence"] = conf;
  } else if (command == "multiscale") {
    const int d = r.get<int>("d", dim);
    require(d >= 1 && d <= 10, r.at("d"), "d must be in 1..10");
    norm["d"] = d;
    if (r.has("a")) norm["a"] = r.get<double>("a");
    const double L0 = r.get<double>("L0", 10.0);
    require(L0 > 1, r.at("L0"), "L0 must be > 1");
    norm["L0"] = L0;
    const int scales = r.get<int>("scales", 4);
    require(scales >= 1 && scales <= 64, r.at("scales"), "scales must be in 1..64");
    norm["scales"] = scales;
    const double m0 = r.get<double>("m0", 1.0), m_inf = r.get<double>("m_inf", 0.5);
    norm["m0"] = m0;
    norm["m_inf"] = m_inf;
    const auto mc = r.get<std::size_t>("mc_replicas", 200);
    require(mc >= 1, r.at("mc_replicas"), "mc_replicas must be >= 1");
    norm["mc_replicas"] = mc;
    if (r.has("probe")) {
      Reader p(r.raw("probe"), r.at("probe"));
      const double rho = p.get<double>("rho"), eps = p.get<double>("epsilon_rho");
      require(rho >= 0 && rho < 1, p.at("rho"), "rho must be in [0,1)");
      require(eps > 0 && eps <= 1, p.at("epsilon_rho"), "epsilon_rho must be in (0,1]");
      p.finish();
      norm["probe"] = {{"rho", rho}, {"epsilon_rho", eps}};
    }
  } else if (command == "disorder-check") {
    const double eps = r.get<double>("epsilon", 0.5);
    require(eps > 0, r.at("epsilon"), "epsilon must be > 0");
    norm["epsilon"] = eps;
    if (r.has("a")) norm["a"] = r.get<double>("a");
  }
  r.finish();
  return norm;
}

std::string file_of(const ExperimentConfig& cfg, const std::string& ext) { return cfg.command + ext; }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

json estimate_json(const Estimate& e) {
  return {{"value", e.value}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}, {"std_error", e.std_error}, {"n", e.n}, {"excluded", e.excluded}};
}

std::string site_str(const Site& s, int dim) {
  std::string out;
  for (int i = 0; i < dim; ++i) out += (i ? " " : "") + std::to_string(s.c[i]);
  return out;
}

struct Output {
  std::ostringstream csv;
  json results = json::object();
};

std::uint64_t process_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, StreamTag::replica, 0); }
std::uint64_t disorder_seed(const ExperimentConfig& cfg, std::size_t r) { return derive_seed(cfg.seed, StreamTag::disorder, r); }

void run_sample(const ExperimentConfig& cfg, const ModelPtr& model, const DisorderSpec& spec, Output& out) {
  const auto env = Environment::sample(model, spec, cfg.region, disorder_seed(cfg, 0));
  const Region lambda = parse_region(cfg.params.at("lambda"), model->dim(), "/params/lambda");
  const ClanLimits lim = limits_of(cfg.params);
  const std::uint64_t seed = process_seed(cfg);
  const auto samples = parallel_map(cfg.replicas, cfg.workers, [&](std::size_t r) {
    return perfect_sample(env, lambda, lim, derive_seed(seed, StreamTag::clan, r));
  });
  const int dim = model->dim();
  out.csv << "replica,animal,prototype,anchor,kind,multiplicity\n";
  std::map<std::string, std::size_t> status;
  std::size_t total = 0;
  for (std::size_t r = 0; r < samples.size(); ++r) {
    ++status[to_string(samples[r].status)];
    if (!samples[r].ok()) continue;
    for (const auto& [id, mult] : samples[r].animals) {
      const Animal& a = env.catalog().animal(id);
      out.csv << r << ',' << id << ',' << a.prototype << ',' << site_str(a.anchor, dim) << ',' << a.kind << ',' << mult << '\n';
      total += static_cast<std::size_t>(mult);
    }
  }
  out.results["status_counts"] = status;
  out.results["total_animals"] = total;
  out.results["mean_animals"] = samples.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(samples.size());
}

void run_clan_stats(const ExperimentConfig& cfg, const ModelPtr& model, const DisorderSpec& spec, Output& out) {
  const auto env = Environment::sample(model, spec, cfg.region, disorder_seed(cfg, 0));
  const Site x = parse_site(cfg.params.at("x"), model->dim(), "/params/x");
  TailThresholds th;
  for (double v : cfg.params.at("L").get<std::vector<double>>()) th.L.push_back(static_cast<int>(v));
  th.T = cfg.params.at("T").get<std::vector<double>>();
  const auto rep = tail_table(env, x, th, cfg.replicas, process_seed(cfg), cfg.params.at("q").get<double>(), limits_of(cfg.params), cfg.workers);
  rep.write_csv(out.csv);
  out.results = rep.to_json();
}

void run_connectivity(const ExperimentConfig& cfg, const ModelPtr& model, const DisorderSpec& spec, Output& out) {
  const int dim = model->dim();
  const auto env = Environment::sample(model, spec, cfg.region, disorder_seed(cfg, 0));
  const SpaceTimePoint X{parse_site(cfg.params.at("x"), dim, "/params/x"), cfg.params.at("t").get<double>()};
  std::optional<Box> box;
  if (cfg.params.contains("box")) box = Box{X, cfg.params["box"]["L"].get<double>(), cfg.params["box"]["T"].get<double>(), model->geometry().delta};
  const ClanLimits lim = limits_of(cfg.params);
  out.csv << "target,y,t_y,distance,estimate,ci_low,ci_high,unresolved\n";
  const auto& targets = cfg.params.at("targets");
  std::vector<double> dist, logp;
  json rows = json::array();
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const SpaceTimePoint Y{parse_site(targets[i]["y"], dim, "/params/targets"), targets[i]["t"].get<double>()};
    const auto est = estimate_G(env, X, Y, box, std::max<std::size_t>(cfg.replicas, 100), derive_seed(process_seed(cfg), StreamTag::connectivity, i),
                                lim, cfg.workers);
    const int dd = sup_distance(X.x, Y.x);
    out.csv << i << ',' << site_str(Y.x, dim) << ',' << csv_number(Y.t) << ',' << dd << ',' << csv_number(est.estimate.value) << ','
            << csv_number(est.estimate.ci_low) << ',' << csv_number(est.estimate.ci_high) << ',' << est.unresolved << '\n';
    if (est.estimate.value > 0) {
      dist.push_back(dd);
      logp.push_back(std::log(est.estimate.value));
    }
    rows.push_back({{"distance", dd}, {"estimate", estimate_json(est.estimate)}, {"unresolved", est.unresolved}});
  }
  out.results["targets"] = rows;
  std::set<double> distinct(dist.begin(), dist.end());
  if (distinct.size() >= 2) {
    const auto f = linear_fit(dist, logp);
    out.results["decay_fit"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"points", f.points}};
  }
}

void run_regularity(const ExperimentConfig& cfg, const ModelPtr& model, const DisorderSpec& spec, Output& out) {
  const int dim = model->dim();
  const auto env = Environment::sample(model, spec, cfg.region, disorder_seed(cfg, 0));
  const double m = cfg.params.at("m").get<double>(), L = cfg.params.at("L").get<double>();
  std::function<double(double)> T_fn;
  if (cfg.params.contains("T_nu")) {
    const double nu = cfg.params["T_nu"].get<double>();
    T_fn = [nu](double l) { return std::exp(std::pow(l, nu)); };
  } else {
    const double T = cfg.params.at("T").get<double>();
    T_fn = [T](double) { return T; };
  }
  const auto sites = parse_sites(cfg.params.at("sites"), dim, "/params/sites");
  const double conf = cfg.params.at("confidence").get<double>();
  std::vector<RegularityVerdict> verdicts;
  out.csv << "site,m,L,T,threshold,estimate,ci_low,ci_high,verdict\n";
  std::map<std::string, std::size_t> counts;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    verdicts.push_back(is_regular(env, sites[i], m, L, T_fn, std::max<std::size_t>(cfg.replicas, 2), conf,
                                  derive_seed(process_seed(cfg), StreamTag::connectivity, i), cfg.workers));
    const auto& v = verdicts.back();
    ++counts[to_string(v.verdict)];
    out.csv << site_str(v.site, dim) << ',' << csv_number(v.m) << ',' << csv_number(v.L) << ',' << csv_number(v.T) << ','
            << csv_number(v.threshold) << ',' << csv_number(v.estimate.value) << ',' << csv_number(v.estimate.ci_low) << ','
            << csv_number(v.estimate.ci_high) << ',' << to_string(v.verdict) << '\n';
  }
  out.results["verdict_counts"] = counts;
  out.results["delta"] = model->geometry().delta;
  out.results["boundary_estimator"] = "bottom-face sites reached plus time measure of shell-site crossing intervals, per replica";
  if (cfg.params.contains("R")) {
    const auto a = event_A_check(verdicts, cfg.params["R"].get<int>(), L, model->geometry().delta);
    json centers = json::array();
    for (const auto& c : a.centers) centers.push_back(site_json(c, dim));
    out.results["event_A"] = {{"holds", a.holds}, {"centers", centers}, {"non_regular", a.singular}, {"exact", a.exact}};
  }
}

void run_multiscale(const ExperimentConfig& cfg, const ModelPtr& model, const DisorderSpec& spec, Output& out) {
  const auto& p = cfg.params;
  const int d = p.at("d").get<int>();
  std::optional<double> a;
  if (p.contains("a")) a = p["a"].get<double>();
  const auto feas = feasible_parameters(d, a, p.at("L0").get<double>(), p.at("m0").get<double>(), p.at("m_inf").get<double>());
  out.results["a_threshold"] = a_threshold(d);
  out.results["alpha"] = optimal_alpha(d);
  out.results["feasible"] = feas.feasible;
  out.csv << "k,L,log10_T,estimate,ci_low,ci_high,target\n";
  if (!feas.feasible) {
    out.results["violated"] = feas.violated;
    return;
  }
  const auto& P = *feas.parameters;
  out.results["parameters"] = P.to_json();
  out.results["verifier_violations"] = verify_parameters(P);
  const ScaledSequence seq(P.L0, P.alpha, P.nu, p.at("scales").get<int>());
  // Good-box probabilities only where the box Λ[centre; L_k+δ] fits and the scale is
  // simulable; other rows leave the estimate columns empty.
  const double delta = model->geometry().delta;
  const Site centre = region_center(cfg.region);
  std::shared_ptr<const AnimalCatalog> catalog;
  json simulated = json::array();
  for (std::size_t k = 0; k < seq.size(); ++k) {
    const double L = static_cast<double>(seq.L(k));
    out.csv << k << ',' << csv_number(L) << ',' << csv_number(static_cast<double>(seq.log10_T(k)));
    const bool fits = k <= 1 && L + delta < 1e6 && cfg.region.contains(Region::ball(cfg.region.dim(), centre, L + delta));
    if (fits && cfg.replicas >= 30) {
      if (!catalog) catalog = std::make_shared<const AnimalCatalog>(model, cfg.region);
      const double nu = P.nu;
      const auto g = empirical_good_probability(catalog, spec, P.m0, L, [nu](double l) { return std::exp(std::pow(l, nu)); }, P.p, cfg.replicas,
                                                p.at("mc_replicas").get<std::size_t>(), derive_seed(process_seed(cfg), StreamTag::multiscale, k),
                                                cfg.workers);
      out.csv << ',' << csv_number(g.estimate.value) << ',' << csv_number(g.estimate.ci_low) << ',' << csv_number(g.estimate.ci_high) << ','
              << csv_number(g.target);
      simulated.push_back({{"k", k}, {"singular", g.singular}, {"inconclusive", g.inconclusive}});
    } else {
      out.csv << ",,,,";
    }
    out.csv << '\n';
  }
  out.results["simulated_scales"] = simulated;
  out.results["faster_than_power_10"] = seq.faster_than_power(10);
  if (p.contains("probe")) {
    auto catalog = std::make_shared<const AnimalCatalog>(model, cfg.region);
    const auto pr = initial_scale_probe(catalog, spec, default_size(*model), p["probe"]["rho"].get<double>(), p["probe"]["epsilon_rho"].get<double>(),
                                        cfg.replicas, process_seed(cfg), cfg.workers);
    out.results["probe"] = {{"estimate", estimate_json(pr.estimate)}, {"pass", pr.pass}};
  }
}

void run_disorder_check(const ExperimentConfig& cfg, const ModelPtr& model, const DisorderSpec& spec, Output& out) {
  auto catalog = std::make_shared<const AnimalCatalog>(model, cfg.region);
  const auto size = default_size(*model);
  std::optional<double> a;
  if (cfg.params.contains("a")) a = cfg.params["a"].get<double>();
  const std::size_t reps = std::max<std::size_t>(cfg.replicas, 2);
  const auto rep = check_hypotheses(catalog, spec, size, cfg.params.at("epsilon").get<double>(), cfg.region, reps, cfg.seed, a, cfg.workers);
  const auto diags = parallel_map(reps, cfg.workers, [&](std::size_t r) {
    return diagnose(Environment::sample(catalog, spec, disorder_seed(cfg, r)), size, cfg.region);
  });
  out.csv << "replica,upsilon,psi,xi,u1,u2,upsilon_le_xi,psi_le_ratio_xi\n";
  std::size_t v1 = 0, v2 = 0;
  for (std::size_t r = 0; r < diags.size(); ++r) {
    const auto& g = diags[r];
    const bool ok1 = g.upsilon <= g.xi * (1 + 1e-12);
    const bool ok2 = g.u1 <= 0 || g.psi <= (g.u2 / g.u1) * g.xi * (1 + 1e-12);
    v1 += !ok1;
    v2 += !ok2;
    out.csv << r << ',' << csv_number(g.upsilon) << ',' << csv_number(g.psi) << ',' << csv_number(g.xi) << ',' << csv_number(g.u1) << ','
            << csv_number(g.u2) << ',' << ok1 << ',' << ok2 << '\n';
  }
  out.results = rep.to_json();
  out.results["violations"] = {{"upsilon_le_xi", v1}, {"psi_le_ratio_xi", v2}};
}

}  // namespace

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ModelPtr build_model(const json& j, const std::string& pointer) { return parse_model(j, pointer).first; }
DisorderSpec build_disorder(const json& j, const std::string& pointer) { return parse_disorder(j, pointer).first; }

ExperimentConfig parse_config(const json& j) {
  Reader r(j, "");
  ExperimentConfig cfg;
  cfg.command = r.get<std::string>("command");
  if (std::find(subcommands().begin(), subcommands().end(), cfg.command) == subcommands().end())
    throw ConfigError("/command", "unknown subcommand '" + cfg.command + "'");
  auto [model, mj] = parse_model(r.raw("model"), "/model");
  cfg.model = mj;
  cfg.disorder = r.has("disorder") ? parse_disorder(r.raw("disorder"), "/disorder").second : parse_disorder(json::object(), "/disorder").second;
  cfg.region = parse_region(r.raw("region"), model->dim(), "/region");
  cfg.replicas = r.get<std::size_t>("replicas", 1000);
  require(cfg.replicas >= 1, "/replicas", "replicas must be >= 1");
  cfg.seed = r.get<std::uint64_t>("seed", 1);
  if (r.has("out")) cfg.out = r.get<std::string>("out");
  cfg.workers = r.get<unsigned>("workers", 1);
  require(cfg.workers >= 1 && cfg.workers <= 256, "/workers", "workers must be in 1..256");
  const json params = r.has("params") ? r.raw("params") : json::object();
  cfg.params = parse_params(cfg.command, params, "/params", model, cfg.region);
  r.finish();
  return cfg;
}

json config_echo(const ExperimentConfig& cfg) {
  return {{"command", cfg.command}, {"model", cfg.model},       {"disorder", cfg.disorder}, {"region", region_json(cfg.region)},
          {"params", cfg.params},   {"replicas", cfg.replicas}, {"seed", cfg.seed}};
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(config_echo(cfg).dump()); }

RunResult run(const ExperimentConfig& cfg) {
  const ModelPtr model = build_model(cfg.model);
  const DisorderSpec spec = build_disorder(cfg.disorder);
  Output out;
  if (cfg.command == "sample")
    run_sample(cfg, model, spec, out);
  else if (cfg.command == "clan-stats")
    run_clan_stats(cfg, model, spec, out);
  else if (cfg.command == "connectivity")
    run_connectivity(cfg, model, spec, out);
  else if (cfg.command == "regularity")
    run_regularity(cfg, model, spec, out);
  else if (cfg.command == "multiscale")
    run_multiscale(cfg, model, spec, out);
  else if (cfg.command == "disorder-check")
    run_disorder_check(cfg, model, spec, out);
  else
    throw ConfigError("/command", "unknown subcommand '" + cfg.command + "'");

  std::filesystem::create_directories(cfg.out);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  RunResult res;
  res.summary = {{"command", cfg.command}, {"version", kVersion}, {"seed", cfg.seed},
                 {"config_hash", hash},    {"config", config_echo(cfg)}, {"results", out.results}};
  const auto csv_path = cfg.out / file_of(cfg, ".csv");
  const auto json_path = cfg.out / file_of(cfg, ".json");
  const auto meta_path = cfg.out / "metadata.json";
  write_file(csv_path, "# command=" + cfg.command + " config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + " version=" + kVersion +
                           "\n" + out.csv.str());
  write_file(json_path, res.summary.dump(2) + "\n");
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  write_file(meta_path, json{{"timestamp", stamp}, {"config_hash", hash}, {"workers", cfg.workers}, {"version", kVersion}}.dump(2) + "\n");
  res.artifacts = {csv_path, json_path, meta_path};
  return res;
}

long CtmcSolution::find(const std::vector<int>& state) const {
  const auto it = std::find(states.begin(), states.end(), state);
  return it == states.end() ? -1 : static_cast<long>(it - states.begin());
}

CtmcSolution ctmc_stationary(const AnimalCatalog& catalog, std::span<const double> rates, std::size_t max_states, int max_multiplicity) {
  const std::size_t n = catalog.size();
  if (rates.size() != n) throw std::invalid_argument("ctmc_stationary needs one rate per animal");
  const AnimalModel& model = catalog.model();

  auto acceptance = [&](AnimalId g, const std::vector<int>& state) {
    std::vector<const Animal*> present;
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < state[i]; ++k) present.push_back(&catalog.animal(static_cast<AnimalId>(i)));
    return model.acceptance(catalog.animal(g), present);
  };

  CtmcSolution sol;
  std::map<std::vector<int>, std::size_t> index;
  std::vector<std::tuple<std::size_t, std::size_t, double>> transitions;
  sol.states.push_back(std::vector<int>(n, 0));
  index[sol.states[0]] = 0;
  for (std::size_t s = 0; s < sol.states.size(); ++s) {
    const std::vector<int> cur = sol.states[s];
    for (std::size_t g = 0; g < n; ++g) {
      if (cur[g] > 0) {
        auto down = cur;
        --down[g];
        transitions.emplace_back(s, index.at(down), static_cast<double>(cur[g]));
      }
      if (rates[g] <= 0 || (max_multiplicity > 0 && cur[g] >= max_multiplicity)) continue;
      const double rate = acceptance(static_cast<AnimalId>(g), cur) * rates[g];
      if (rate <= 0) continue;
      auto up = cur;
      ++up[g];
      auto [it, fresh] = index.try_emplace(up, sol.states.size());
      if (fresh) {
        if (sol.states.size() >= max_states)
          throw StateSpaceOverflow("reachable state space exceeds the cap of " + std::to_string(max_states) + " states");
        sol.states.push_back(up);
      }
      transitions.emplace_back(s, it->second, rate);
    }
  }

  const auto N = static_cast<Eigen::Index>(sol.states.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (const auto& [from, to, rate] : transitions) {
    A(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) += rate;
    A(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(from)) -= rate;
  }
  sol.max_row_sum = A.rowwise().sum().cwiseAbs().maxCoeff();
  // Solve A^T π = 0 with the last equation replaced by Σπ = 1.
  Eigen::MatrixXd M = A.transpose();
  M.row(N - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
  rhs(N - 1) = 1.0;
  const Eigen::VectorXd pi = M.fullPivLu().solve(rhs);
  sol.pi.assign(pi.data(), pi.data() + N);
  sol.residual = (pi.transpose() * A).cwiseAbs().maxCoeff();
  return sol;
}

void TailReport::write_csv(std::ostream& os) const {
  os << "quantity,threshold,abscissa,estimate,ci_low,ci_high,n,q,fit_slope\n";
  auto rows = [&](const char* name, const std::vector<TailRow>& v, bool time, const LinearFit& fit) {
    for (const auto& row : v) {
      const double x = time ? std::pow(std::log1p(row.threshold), q) : row.threshold;
      os << name << ',' << csv_number(row.threshold) << ',' << csv_number(x) << ',' << csv_number(row.estimate.value) << ','
         << csv_number(row.estimate.ci_low) << ',' << csv_number(row.estimate.ci_high) << ',' << row.estimate.n << ',' << csv_number(q) << ','
         << csv_number(fit.points >= 2 ? fit.slope : std::nan("")) << '\n';
    }
  };
  rows("SD", table.sd, false, sd_fit);
  rows("TL", table.tl, true, tl_fit);
}

json TailReport::to_json() const {
  auto fit_json = [](const LinearFit& f) -> json {
    if (f.points < 2) return nullptr;
    return {{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"points", f.points}};
  };
  return {{"q", q},
          {"replicas", table.replicas},
          {"closed", table.closed},
          {"escaped", table.escaped},
          {"budget_exceeded", table.budget_exceeded},
          {"ss_mean", estimate_json(table.ss_mean)},
          {"sd_fit", fit_json(sd_fit)},
          {"tl_fit", fit_json(tl_fit)}};
}

TailReport tail_table(const Environment& env, const Site& x, const TailThresholds& thresholds, std::size_t replicas, std::uint64_t seed, double q,
                      const ClanLimits& limits, unsigned workers) {
  if (!(q > 0)) throw std::invalid_argument("tail_table needs q > 0");
  TailReport rep;
  rep.q = q;
  rep.table = clan_tail_estimates(env, x, thresholds, replicas, seed, limits, workers);
  auto fit = [](const std::vector<TailRow>& rows, auto abscissa) {
    std::vector<double> xs, ys;
    for (const auto& r : rows)
      if (r.estimate.value > 0) {
        xs.push_back(abscissa(r.threshold));
        ys.push_back(std::log(r.estimate.value));
      }
    LinearFit f;
    f.points = xs.size();
    if (std::set<double>(xs.begin(), xs.end()).size() >= 2) f = linear_fit(xs, ys);
    else f.points = 0;
    return f;
  };
  rep.sd_fit = fit(rep.table.sd, [](double L) { return L; });
  rep.tl_fit = fit(rep.table.tl, [q](double T) { return std::pow(std::log1p(T), q); });
  return rep;
}

}  // namespace clansim

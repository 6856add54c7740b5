#include "clansim/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "clansim/parallel.hpp"

namespace clansim {

namespace {

double mid(double lo, double hi) { return lo + (hi - lo) / 2; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

nlohmann::json MultiscaleParameters::to_json() const {
  return {{"d", d},         {"alpha", alpha}, {"a", a},         {"nu", nu},       {"p", p},
          {"kappa", kappa}, {"b", b},         {"eta", eta},     {"tau", tau},     {"theta", theta},
          {"theta0", theta0}, {"m0", m0},     {"m_inf", m_inf}, {"q", q},         {"q0", q0},
          {"R", R},         {"L0", L0},       {"Delta", Delta}, {"log_Delta", log_Delta},
          {"mass_recursion", "m_{k+1} >= m_k - a0 / L_k^" + fmt(theta0) + " (a0 not explicit)"}};
}

double optimal_alpha(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  return d + std::sqrt(static_cast<double>(d) * d + d);
}

Feasibility feasible_parameters(int d, std::optional<double> a_in, double L0, double m0, double m_inf) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  Feasibility out;
  const double dd = d;
  const double alpha = optimal_alpha(d);
  const double threshold = a_threshold(d);
  const double a = a_in.value_or(1.01 * threshold);
  if (!(a > threshold)) {
    out.violated = "a > 2d^2(1 + sqrt(1+1/d) + 1/(2d)) = " + fmt(threshold) + " (got a = " + fmt(a) + ")";
    return out;
  }
  if (!(0 < m_inf && m_inf < m0)) {
    out.violated = "0 < m_inf < m0";
    return out;
  }
  const double c = alpha - dd + alpha * dd;
  const double nu_lo = std::max(alpha * dd * (alpha + a + 1) / (a * c), alpha * dd / c);
  if (!(nu_lo < 1)) {
    out.violated = "alpha*d*(alpha+a+1)/(a*(alpha-d+alpha*d)) < nu < 1";
    return out;
  }
  MultiscaleParameters P;
  P.d = d;
  P.alpha = alpha;
  P.a = a;
  P.nu = mid(nu_lo, 1.0);
  const double p_hi = (a * (P.nu * c - alpha * dd) - alpha * dd) / alpha;
  if (!(alpha * dd < p_hi)) {
    out.violated = "alpha*d < p < (a(nu(alpha-d+alpha*d) - alpha*d) - alpha*d)/alpha";
    return out;
  }
  P.p = mid(alpha * dd, p_hi);
  P.theta0 = std::min(alpha - 1, alpha * (1 - P.nu));
  const double kappa_lo = std::max(1.0, P.nu + P.theta0);
  const double eta_min = alpha * (P.p + dd) / a;
  const double eta_max = alpha * P.nu - kappa_lo * dd;
  if (!(eta_min < eta_max)) {
    out.violated = "alpha(p+d)/a < eta < alpha*nu - kappa*d";
    return out;
  }
  P.eta = mid(eta_min, eta_max);
  const double slack = eta_max - P.eta;
  P.kappa = kappa_lo + slack / (3 * dd);
  P.b = P.kappa * dd + P.eta + slack / 3;
  P.tau = mid(P.nu, std::min(P.kappa - P.theta0, alpha * P.nu));
  P.theta = mid(0.0, P.theta0);
  P.m0 = m0;
  P.m_inf = m_inf;
  P.q = 1 / P.nu;
  P.q0 = a * c / (alpha * dd * (alpha + a + 1));
  P.R = static_cast<int>(std::floor(alpha * P.p / (P.p - alpha * dd))) + 1;
  P.L0 = L0;
  P.log_Delta = -std::pow(L0, P.eta);
  P.Delta = std::exp(P.log_Delta);
  out.feasible = true;
  out.parameters = P;
  return out;
}

std::vector<std::string> verify_parameters(const MultiscaleParameters& P) {
  std::vector<std::string> bad;
  auto req = [&](bool ok, const char* what) {
    if (!ok) bad.emplace_back(what);
  };
  const double d = P.d;
  const double c = P.alpha - d + P.alpha * d;
  req(P.d >= 1, "d >= 1");
  req(P.alpha > 1, "alpha > 1");
  req(P.alpha > d, "alpha > d");
  req(P.a > 2 * d * d * (1 + std::sqrt(1 + 1 / d) + 1 / (2 * d)), "a above threshold");
  req(0 < P.nu && P.nu < 1, "0 < nu < 1");
  req(P.nu > P.alpha * d / c, "nu > alpha d / (alpha - d + alpha d)");
  req(P.nu > P.alpha * d * (P.alpha + P.a + 1) / (P.a * c), "nu > alpha d (alpha+a+1) / (a (alpha-d+alpha d))");
  req(P.p > P.alpha * d, "p > alpha d");
  req(P.p < (P.a * (P.nu * c - P.alpha * d) - P.alpha * d) / P.alpha, "p below upper bound");
  req(std::abs(P.theta0 - std::min(P.alpha - 1, P.alpha * (1 - P.nu))) < 1e-12, "theta0 = min(alpha-1, alpha(1-nu))");
  req(std::max(1.0, P.nu + P.theta0) < P.kappa, "kappa > max(1, nu + theta0)");
  req(P.kappa < P.b / d, "kappa < b/d");
  req(P.b / d < P.alpha * P.nu / d, "b/d < alpha nu / d");
  req(P.b > 0, "b > 0");
  req(0 < P.eta && P.eta < P.b - P.kappa * d, "0 < eta < b - kappa d");
  req(P.a > P.alpha * (P.p + d) / P.eta, "a > alpha (p+d) / eta");
  req(P.nu < P.tau && P.tau < std::min(P.kappa - P.theta0, P.alpha * P.nu), "nu < tau < min(kappa - theta0, alpha nu)");
  req(0 < P.theta && P.theta < P.theta0, "0 < theta < theta0");
  req(0 < P.m_inf && P.m_inf < P.m0, "0 < m_inf < m0");
  req(std::abs(P.q * P.nu - 1) < 1e-12, "q nu = 1");
  req(std::abs(P.q0 - P.a * c / (P.alpha * d * (P.alpha + P.a + 1))) < 1e-12 * std::max(1.0, P.q0), "q0 formula");
  req(1 < P.q && P.q < P.q0, "1 < q < q0");
  req(P.R > P.alpha * P.p / (P.p - P.alpha * d), "R > alpha p / (p - alpha d)");
  req(P.log_Delta <= 0 && std::abs(P.log_Delta + std::pow(P.L0, P.eta)) <= 1e-12 * std::abs(P.log_Delta), "ln Delta = -L0^eta <= 0");
  return bad;
}

ScaledSequence::ScaledSequence(long double L0, long double alpha, long double nu, int scales) : alpha_(alpha), nu_(nu) {
  if (!(L0 > 1) || !(alpha > 1) || !(nu > 0 && nu < 1) || scales < 1) throw std::invalid_argument("scaled sequence needs L0 > 1, alpha > 1, 0 < nu < 1");
  L_.push_back(L0);
  for (int k = 1; k < scales; ++k) {
    const long double next = powl(L_.back(), alpha);
    if (!std::isfinite(next)) break;
    L_.push_back(next);
  }
}

long double ScaledSequence::log_T(std::size_t k) const { return powl(L(k), nu_); }
long double ScaledSequence::log10_T(std::size_t k) const { return log_T(k) / logl(10.0L); }

bool ScaledSequence::faster_than_power(int n) const {
  long double prev = -std::numeric_limits<long double>::infinity();
  long double last = 0;
  for (std::size_t k = 0; k < L_.size(); ++k) {
    last = log_T(k) - n * logl(L_[k]);
    if (k + 1 < L_.size() && last < prev) return false;
    prev = last;
  }
  return last > 0;
}

void ScaledSequence::require_simulable(std::size_t k) {
  if (k >= 2)
    throw std::invalid_argument("scale k = " + std::to_string(k) + " has time height exp(L_k^nu) far beyond simulation; only k in {0,1} are simulated");
}

double k_delta(double w, double delta) {
  if (!(w >= 0)) throw std::invalid_argument("k_delta needs w >= 0");
  if (!(delta > 0)) throw std::invalid_argument("k_delta needs delta > 0");
  return std::exp(-(1 + delta) * w) + (-std::expm1(-w)) * (-std::expm1(-delta)) * std::exp(-delta * w);
}

EventBResult event_B_check(const Environment& env, const std::vector<Region>& tl, double delta, double l, double b) {
  const auto& cat = env.catalog();
  EventBResult r;
  for (AnimalId id = 0; id < cat.size(); ++id) {
    const auto& sup = cat.animal(id).support;
    const bool inside = std::all_of(sup.begin(), sup.end(), [&](const Site& s) {
      return std::any_of(tl.begin(), tl.end(), [&](const Region& g) { return g.contains(s); });
    });
    if (inside) r.log_sum += -std::log(k_delta(env.rate(id), delta));
  }
  const double bound = std::pow(l, b);
  r.margin = bound - r.log_sum;
  r.holds = r.log_sum <= bound;
  return r;
}

namespace {

bool exact_cover(const std::vector<std::uint32_t>& masks, std::uint32_t need, std::uint32_t covered, int budget,
                 const std::vector<std::vector<std::size_t>>& by_site, std::vector<std::size_t>& chosen) {
  if ((covered & need) == need) return true;
  if (budget == 0) return false;
  int first = 0;
  while (covered >> first & 1u) ++first;
  for (std::size_t c : by_site[first]) {
    chosen.push_back(c);
    if (exact_cover(masks, need, covered | masks[c], budget - 1, by_site, chosen)) return true;
    chosen.pop_back();
  }
  return false;
}

}  // namespace

EventAResult event_A_check(const std::vector<RegularityVerdict>& verdicts, int R, double l, double delta) {
  EventAResult out;
  const int r = static_cast<int>(std::floor(2 * (l + delta) + 1 + 1e-9));
  std::vector<Site> candidates, bad;
  for (const auto& v : verdicts) {
    candidates.push_back(v.site);
    if (v.verdict != Regularity::regular) bad.push_back(v.site);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::sort(bad.begin(), bad.end());
  out.singular = bad.size();
  if (bad.empty()) {
    out.holds = true;
    return out;
  }
  // Greedy: cover the first uncovered site with the centre covering most uncovered sites.
  std::vector<bool> covered(bad.size(), false);
  std::size_t left = bad.size();
  while (left > 0) {
    std::size_t first = 0;
    while (covered[first]) ++first;
    const Site* best = nullptr;
    std::size_t best_gain = 0;
    for (const auto& c : candidates) {
      if (sup_distance(c, bad[first]) > r) continue;
      std::size_t gain = 0;
      for (std::size_t i = 0; i < bad.size(); ++i)
        if (!covered[i] && sup_distance(c, bad[i]) <= r) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = &c;
      }
    }
    out.centers.push_back(*best);
    for (std::size_t i = 0; i < bad.size(); ++i)
      if (!covered[i] && sup_distance(*best, bad[i]) <= r) {
        covered[i] = true;
        --left;
      }
  }
  if (static_cast<int>(out.centers.size()) <= R) {
    out.holds = true;
    return out;
  }
  if (bad.size() > 24) return out;  // greedy verdict only: conservative
  // Exhaustive search over centres with distinct coverage patterns.
  std::vector<std::uint32_t> masks;
  std::vector<Site> mask_site;
  for (const auto& c : candidates) {
    std::uint32_t m = 0;
    for (std::size_t i = 0; i < bad.size(); ++i)
      if (sup_distance(c, bad[i]) <= r) m |= 1u << i;
    if (m == 0 || std::find(masks.begin(), masks.end(), m) != masks.end()) continue;
    masks.push_back(m);
    mask_site.push_back(c);
  }
  std::vector<std::vector<std::size_t>> by_site(bad.size());
  for (std::size_t c = 0; c < masks.size(); ++c)
    for (std::size_t i = 0; i < bad.size(); ++i)
      if (masks[c] >> i & 1u) by_site[i].push_back(c);
  std::vector<std::size_t> chosen;
  const std::uint32_t need = bad.size() == 32 ? ~0u : (1u << bad.size()) - 1;
  out.exact = true;
  if (exact_cover(masks, need, 0, R, by_site, chosen)) {
    out.holds = true;
    out.centers.clear();
    for (std::size_t c : chosen) out.centers.push_back(mask_site[c]);
  }
  return out;
}

std::vector<Region> tilde_lambda(int dim, const std::vector<Site>& centers, const Site& x, double L, double delta, double l, double kappa) {
  const Region outer = Region::ball(dim, x, L + delta);
  const double rad = std::pow(l, kappa);
  std::vector<Region> out;
  for (const auto& c : centers) {
    const Region ball = Region::ball(dim, c, rad);
    Site lo, hi;
    for (int i = 0; i < dim; ++i) {
      lo.c[i] = std::max(ball.lo().c[i], outer.lo().c[i]);
      hi.c[i] = std::min(ball.hi().c[i], outer.hi().c[i]);
    }
    const Region cut(dim, lo, hi);
    if (!cut.empty()) out.push_back(cut);
  }
  return out;
}

GoodProbability empirical_good_probability(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, double m, double L,
                                           const std::function<double(double)>& T_fn, double p, std::size_t env_replicas,
                                           std::size_t mc_replicas, std::uint64_t seed, unsigned workers) {
  if (env_replicas < 30) throw std::invalid_argument("empirical good probability needs at least 30 environments");
  const Region& w = catalog->region();
  Site centre;
  for (int i = 0; i < w.dim(); ++i) centre.c[i] = (w.lo().c[i] + w.hi().c[i]) / 2;
  const auto verdicts = parallel_map(env_replicas, workers, [&](std::size_t r) {
    const auto env = Environment::sample(catalog, spec, derive_seed(seed, StreamTag::multiscale, r));
    return is_regular(env, centre, m, L, T_fn, mc_replicas, 0.95, derive_seed(seed, StreamTag::connectivity, r)).verdict;
  });
  GoodProbability g;
  g.L = L;
  g.target = 1 - std::pow(L, -p);
  std::size_t good = 0;
  for (auto v : verdicts) {
    if (v == Regularity::regular) ++good;
    if (v == Regularity::singular) ++g.singular;
    if (v == Regularity::inconclusive) ++g.inconclusive;
  }
  g.estimate = proportion_estimate(good, env_replicas);
  return g;
}

ProbeResult initial_scale_probe(std::shared_ptr<const AnimalCatalog> catalog, const DisorderSpec& spec, const SizeFunction& size, double rho,
                                double epsilon_rho, std::size_t replicas, std::uint64_t seed, unsigned workers) {
  if (!(rho >= 0 && rho < 1)) throw std::invalid_argument("initial scale probe needs rho in [0,1)");
  const auto hits = parallel_map(replicas, workers, [&](std::size_t r) {
    const auto env = Environment::sample(catalog, spec, derive_seed(seed, StreamTag::multiscale, r));
    return psi(env, size, env.region()) > rho ? 1 : 0;
  });
  ProbeResult out;
  std::size_t k = 0;
  for (int h : hits) k += static_cast<std::size_t>(h);
  out.estimate = proportion_estimate(k, replicas);
  out.pass = out.estimate.ci_high < epsilon_rho;
  return out;
}

}  // namespace clansim

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "clansim/clan_engine.hpp"
#include "clansim/errors.hpp"
#include "helpers.hpp"

using namespace clansim;
using testing::env_of;
using testing::homogeneous;
using testing::S;

namespace {

CylinderConfiguration hand_config(std::shared_ptr<const AnimalCatalog> cat, double t0, double t1, std::vector<Cylinder> cyl) {
  CylinderConfiguration cfg;
  cfg.catalog = std::move(cat);
  cfg.region = cfg.catalog->region();
  cfg.t0 = t0;
  cfg.t1 = t1;
  for (std::uint32_t i = 0; i < cyl.size(); ++i) cyl[i].draw = i;
  std::sort(cyl.begin(), cyl.end(), precedes);
  cfg.cylinders = std::move(cyl);
  return cfg;
}

Cylinder cyl(AnimalId a, double birth, double life, double mark = 0.5) {
  Cylinder c;
  c.animal = a;
  c.birth = birth;
  c.lifetime = life;
  c.mark = mark;
  return c;
}

ExploreOptions wall_options(const Site& x, double t) {
  ExploreOptions opt;
  opt.center = x;
  opt.t_ref = t;
  opt.limits.region_is_wall = true;
  opt.truncation_is_escape = false;
  return opt;
}

}  // namespace

TEST_SUITE("environment") {
  TEST_CASE("degenerate marginals give deterministic rates") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 4), 0.3);
    for (double w : env.rates()) CHECK(w == doctest::Approx(0.3));
    DisorderSpec spec;
    spec.site = Marginal::degenerate(0.5);
    const auto prod = Environment::sample(make_domino_model(1), spec, Region::centered(1, 3), 5);
    for (double w : prod.rates()) CHECK(w == doctest::Approx(0.25));
  }

  TEST_CASE("sampling is reproducible and validated") {
    DisorderSpec spec;
    spec.site = Marginal::exponential(2.0);
    const auto m = make_monomer_model(2);
    const auto a = Environment::sample(m, spec, Region::centered(2, 3), 42);
    const auto b = Environment::sample(m, spec, Region::centered(2, 3), 42);
    CHECK(std::equal(a.rates().begin(), a.rates().end(), b.rates().begin(), b.rates().end()));
    CHECK(a.snapshot() == b.snapshot());
    const auto c = Environment::from_snapshot(a.snapshot(), a.catalog_ptr(), spec);
    CHECK(std::equal(a.rates().begin(), a.rates().end(), c.rates().begin(), c.rates().end()));
    CHECK_THROWS(Marginal::from_name("cauchy", {1.0}));
    CHECK_THROWS(Marginal::from_name("uniform", {1.0}));
    DisorderSpec bad;
    bad.scale = -1.0;
    CHECK_THROWS(bad.validate());
    DisorderSpec rc;
    rc.rate_map = RateMap::random_cluster;
    CHECK_THROWS(rc.validate());
  }

  TEST_CASE("rates of compatible animals are independent") {
    DisorderSpec spec;
    spec.site = Marginal::uniform(0.0, 1.0);
    const auto cat = std::make_shared<const AnimalCatalog>(make_domino_model(1), Region::centered(1, 4));
    const AnimalId a = *cat->find(0, S(-2)), b = *cat->find(0, S(1));
    const int n = 10000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int i = 0; i < n; ++i) {
      const auto env = Environment::sample(cat, spec, static_cast<std::uint64_t>(i));
      const double x = env.rate(a), y = env.rate(b);
      sa += x, sb += y, sab += x * y, saa += x * x, sbb += y * y;
    }
    const double cov = sab / n - sa / n * sb / n;
    const double corr = cov / std::sqrt((saa / n - sa / n * sa / n) * (sbb / n - sb / n * sb / n));
    CHECK(std::abs(corr) < 3.0 / std::sqrt(n));
  }

  TEST_CASE("diagnostics on homogeneous environments") {
    const Region win = Region::centered(2, 4), inner = Region::centered(2, 1);
    const auto mono = env_of(make_monomer_model(2), win, 0.4);
    const auto size = default_size(mono.model());
    CHECK(upsilon(mono, inner) == doctest::Approx(0.4));
    CHECK(psi(mono, size, inner) == doctest::Approx(0.4));
    CHECK(xi(mono, inner) == doctest::Approx(0.4));
    const auto dom = env_of(make_domino_model(2), win, 0.25);
    CHECK(upsilon(dom, inner) == doctest::Approx(1.0));
    CHECK(xi(dom, inner) == doctest::Approx(2.0));
    const auto zero = env_of(make_domino_model(2), win, 0.0);
    CHECK(upsilon(zero, inner) == 0.0);
    CHECK(psi(zero, default_size(zero.model()), inner) == 0.0);
    CHECK_THROWS(upsilon(mono, Region(2, S(1, 1), S(0, 0))));
    const auto hr = halo_ratios(dom, default_size(dom.model()), inner);
    CHECK(hr.u1 == doctest::Approx(1.0));
    CHECK(hr.u2 == doctest::Approx(1.0));
  }

  TEST_CASE("psi of two mutually exclusive animals against brute force") {
    DisorderSpec spec;
    spec.kind_weights = {1.0, 2.0};
    const auto env = Environment::sample(make_monomer_model(1, 2), spec, Region::centered(1, 0), 1);
    const auto& cat = env.catalog();
    double brute = 0;
    for (AnimalId g = 0; g < cat.size(); ++g) {
      double sum = 0;
      for (AnimalId t = 0; t < cat.size(); ++t)
        if (cat.model().incompatible(cat.animal(g), cat.animal(t))) sum += env.rate(t);
      brute = std::max(brute, sum);
    }
    CHECK(brute == doctest::Approx(3.0));
    CHECK(psi(env, default_size(env.model()), env.region()) == doctest::Approx(brute));
  }

  TEST_CASE("diagnostic inequalities and scaling") {
    DisorderSpec spec;
    spec.site = Marginal::lognormal(-1.0, 0.8);
    for (const auto& m : {make_domino_model(2), make_strauss_model(2, 1, Profile::geometric(0.5)),
                          make_area_interaction_model(2, {S(0, 0), S(0, 1)}, Profile::hardcore())}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto env = Environment::sample(m, spec, Region::centered(2, 4), seed);
        const auto size = default_size(*m);
        const auto g = diagnose(env, size, Region::centered(2, 1));
        CHECK(g.upsilon <= g.xi * (1 + 1e-12));
        CHECK(g.u1 <= g.u2);
        CHECK(g.psi <= g.u2 / g.u1 * g.xi * (1 + 1e-12));
        const auto s = diagnose(env.scaled(2.5), size, Region::centered(2, 1));
        CHECK(s.upsilon == doctest::Approx(2.5 * g.upsilon));
        CHECK(s.psi == doctest::Approx(2.5 * g.psi));
        CHECK(s.xi == doctest::Approx(2.5 * g.xi));
      }
    }
  }

  TEST_CASE("aleph estimates") {
    const Region win = Region::centered(1, 0);
    const auto cat = std::make_shared<const AnimalCatalog>(make_monomer_model(1), win);
    CHECK(aleph_estimate(cat, homogeneous(0.0), 6.0, win, 10, 1).value == 0.0);
    const auto one = aleph_estimate(cat, homogeneous(1.0), 6.0, win, 10, 1);
    CHECK(one.value == doctest::Approx(std::pow(std::log(2.0), 6.0)));
    CHECK(one.std_error == doctest::Approx(0.0));
    DisorderSpec ex;
    ex.site = Marginal::exponential(1.0);
    const auto est = aleph_estimate(cat, ex, 6.0, win, 20000, 7);
    boost::math::quadrature::exp_sinh<double> q;
    const double exact = q.integrate([](double u) { return std::pow(std::log1p(u), 6.0) * std::exp(-u); });
    CHECK(est.ci_low <= exact);
    CHECK(exact <= est.ci_high);
  }

  TEST_CASE("hypothesis report") {
    CHECK(a_threshold(1) == doctest::Approx(5.828427).epsilon(1e-7));
    CHECK(a_threshold(2) == doctest::Approx(19.797959).epsilon(1e-7));
    const Region win = Region::centered(1, 3);
    const auto cat = std::make_shared<const AnimalCatalog>(make_monomer_model(1), win);
    const auto rep = check_hypotheses(cat, homogeneous(0.0), default_size(cat->model()), 0.01, win, 5, 1);
    CHECK(rep.aleph_pass);
    CHECK(rep.psi_pass);
    CHECK(rep.corollary_pass);
    CHECK(rep.a_threshold == doctest::Approx(5.828427));
  }
}

TEST_SUITE("free_process") {
  TEST_CASE("zero rates give empty configurations") {
    const auto env = env_of(make_monomer_model(1), Region::centered(1, 3), 0.0);
    CHECK(sample_window(env, env.region(), -5, 0, 1).cylinders.empty());
    CHECK(alive_at(sample_window(env, env.region(), -5, 0, 1), -1).empty());
  }

  TEST_CASE("stationary counts and births") {
    const auto env = env_of(make_monomer_model(1), Region::centered(1, 0), 0.7);
    const int n = 20000;
    double sum = 0, sum2 = 0, births = 0;
    for (int r = 0; r < n; ++r) {
      const auto cfg = sample_window(env, env.region(), 0.0, 3.0, static_cast<std::uint64_t>(r));
      const double k = static_cast<double>(alive_at(cfg, 1.7).size());
      sum += k;
      sum2 += k * k;
      for (const auto& c : cfg.cylinders) births += !c.truncated;
    }
    const double mean = sum / n, var = sum2 / n - mean * mean;
    CHECK(std::abs(mean - 0.7) < 3 * std::sqrt(0.7 / n));
    CHECK(var / mean == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(births / n - 2.1) < 3 * std::sqrt(2.1 / n));
  }

  TEST_CASE("counts of different animals are uncorrelated") {
    const auto env = env_of(make_monomer_model(1), Region::centered(1, 1), 0.5);
    const int n = 10000;
    double sa = 0, sb = 0, sab = 0;
    for (int r = 0; r < n; ++r) {
      const auto alive = alive_at(sample_window(env, env.region(), -1, 0, static_cast<std::uint64_t>(r)), 0.0);
      double a = 0, b = 0;
      for (const auto& c : alive) (c.animal == 0 ? a : b) += c.animal <= 1;
      sa += a, sb += b, sab += a * b;
    }
    const double cov = sab / n - sa / n * sb / n;
    CHECK(std::abs(cov) < 3 * 0.5 / std::sqrt(n));
  }

  TEST_CASE("lazy and eager realizations agree") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 5), 0.4);
    const Region box = Region::centered(1, 3);
    const auto cfg = sample_window(env, box, -6.0, 0.0, 77);
    BoxedSource boxed(env, box, -6.0, 0.0, 77);
    ConfigurationSource eager(cfg);
    for (double t : {-0.1, -2.5, -5.9, -6.0})
      for (AnimalId id = 0; id < env.catalog().size(); ++id) {
        std::vector<Cylinder> a, b;
        boxed.alive_at(id, t, a);
        eager.alive_at(id, t, b);
        std::sort(a.begin(), a.end(), precedes);
        std::sort(b.begin(), b.end(), precedes);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
          CHECK(a[i].same(b[i]));
          CHECK(a[i].birth == b[i].birth);
          CHECK(a[i].truncated == b[i].truncated);
        }
      }
    // Looking deeper first yields the same recent past.
    FreeProcess f1(env, 9), f2(env, 9);
    std::vector<Cylinder> deep, a, b;
    f2.alive_at(0, -30.0, deep);
    f1.alive_at(0, -1.0, a);
    f2.alive_at(0, -1.0, b);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].birth == b[i].birth);
  }

  TEST_CASE("restriction") {
    const auto cat = std::make_shared<const AnimalCatalog>(make_domino_model(1), Region::centered(1, 3));
    const AnimalId inner = *cat->find(0, S(0)), edge = *cat->find(0, S(1));
    const auto cfg = hand_config(cat, 0.0, 10.0, {cyl(inner, 1.0, 4.0), cyl(edge, 2.0, 1.0)});
    const auto r = restrict(cfg, Region(1, S(-1), S(1)), 2.0, 3.0);
    REQUIRE(r.cylinders.size() == 1);
    CHECK(r.cylinders[0].birth == 2.0);
    CHECK(r.cylinders[0].death() == 3.0);
    CHECK(r.cylinders[0].truncated);
    const auto full = restrict(cfg, cfg.region, cfg.t0, cfg.t1);
    CHECK(full.cylinders.size() == cfg.cylinders.size());
    const auto twice = restrict(r, r.region, r.t0, r.t1);
    REQUIRE(twice.cylinders.size() == r.cylinders.size());
    CHECK(twice.cylinders[0].birth == r.cylinders[0].birth);
    CHECK(twice.cylinders[0].lifetime == r.cylinders[0].lifetime);
    CHECK_THROWS(restrict(cfg, Region::centered(1, 5), 0, 1));
  }

  TEST_CASE("closed life intervals") {
    const auto cat = std::make_shared<const AnimalCatalog>(make_monomer_model(1), Region::centered(1, 0));
    const auto cfg = hand_config(cat, -5, 5, {cyl(0, 0.0, 2.0)});
    CHECK(alive_at(cfg, 1.0).size() == 1);
    CHECK(alive_at(cfg, 2.0).size() == 1);
    CHECK(alive_at(cfg, 0.0).size() == 1);
    CHECK(alive_at(cfg, 2.5).empty());
  }

  TEST_CASE("FKG for increasing occupation events") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 2), 0.3);
    const int n = 20000;
    std::size_t na = 0, nb = 0, nab = 0;
    for (int r = 0; r < n; ++r) {
      const auto cfg = sample_window(env, env.region(), -1.0, 0.0, static_cast<std::uint64_t>(r));
      bool a = false, b = false;
      for (const auto& c : cfg.cylinders) {
        a = a || cfg.basis(c).contains(S(0));
        b = b || cfg.basis(c).contains(S(1));
      }
      na += a, nb += b, nab += a && b;
    }
    const double pa = double(na) / n, pb = double(nb) / n, pab = double(nab) / n;
    CHECK(pab >= pa * pb - 3 * std::sqrt(pab * (1 - pab) / n));
  }

  TEST_CASE("rate overflow is reported") {
    const auto cat = std::make_shared<const AnimalCatalog>(make_monomer_model(1), Region::centered(1, 1));
    const auto env = Environment::sample(cat, homogeneous(1.0), 1).with_rates({1.0, INFINITY, 1.0});
    CHECK_THROWS_AS(sample_window(env, env.region(), -1, 0, 1), RateOverflow);
  }
}

TEST_SUITE("clan_engine") {
  TEST_CASE("zero rates give empty closed clans") {
    const auto env = env_of(make_monomer_model(1), Region::centered(1, 3), 0.0);
    const Clan c = clan_of_point(env, S(0), 0.0, {}, 1);
    CHECK(c.status == ClanStatus::closed);
    CHECK(c.cylinders.empty());
    CHECK(c.stats.tl == 0.0);
    CHECK(c.stats.sd == 0);
    CHECK(c.stats.ss == 0);
    const auto t = clan_tail_estimates(env, S(0), {{0, 1}, {0.5, 1.0}}, 100, 3);
    for (const auto& r : t.sd) CHECK(r.estimate.value == 0.0);
    for (const auto& r : t.tl) CHECK(r.estimate.value == 0.0);
  }

  TEST_CASE("first generation") {
    const auto cat = std::make_shared<const AnimalCatalog>(make_monomer_model(1), Region::centered(1, 2));
    const AnimalId x = *cat->find(0, S(0)), y = *cat->find(0, S(1));
    const auto cfg = hand_config(cat, -10, 0, {cyl(x, -3, 5), cyl(x, -5, 1), cyl(y, -4, 4), cyl(x, -2.5, 0.2)});
    ConfigurationSource src(cfg);
    const Cylinder top = *std::find_if(cfg.cylinders.begin(), cfg.cylinders.end(), [](const Cylinder& c) { return c.birth == -2.5; });
    const auto gen = first_generation(src, top);
    REQUIRE(gen.size() == 1);
    CHECK(gen[0].birth == -3.0);
    const Cylinder oldest = *std::find_if(cfg.cylinders.begin(), cfg.cylinders.end(), [](const Cylinder& c) { return c.birth == -5; });
    CHECK(first_generation(src, oldest).empty());
  }

  TEST_CASE("mean covering count equals the local rate sum") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 4), 0.3);
    const int n = 20000;
    double sum = 0;
    for (int r = 0; r < n; ++r) {
      FreeProcess fp(env, static_cast<std::uint64_t>(r));
      sum += static_cast<double>(covering(fp, S(0), 0.0).size());
    }
    const double ups = upsilon(env, Region::centered(1, 0));
    CHECK(ups == doctest::Approx(0.6));
    CHECK(std::abs(sum / n - ups) < 3 * std::sqrt(ups / n));
  }

  TEST_CASE("subcritical self-exclusion clans close and TL covers the first age") {
    const auto env = env_of(make_monomer_model(1), Region::centered(1, 3), 0.5);
    int closed = 0;
    for (int r = 0; r < 10000; ++r) {
      FreeProcess fp(env, static_cast<std::uint64_t>(r));
      const auto cover = covering(fp, S(0), 0.0);
      const Clan c = clan_of_point(fp, S(0), 0.0);
      closed += c.status == ClanStatus::closed;
      if (!cover.empty()) {
        CHECK(c.cylinders.size() >= cover.size());
        CHECK(c.stats.tl >= -cover.front().birth);
      }
    }
    CHECK(closed == 10000);
  }

  TEST_CASE("keep/erase hand traces") {
    const auto cat = std::make_shared<const AnimalCatalog>(make_monomer_model(1, 2), Region::centered(1, 0));
    const auto one = hand_config(cat, -10, 0, {cyl(0, -1, 2)});
    ConfigurationSource s1(one);
    const Clan c1 = explore(s1, covering(s1, S(0), 0.0), wall_options(S(0), 0.0));
    REQUIRE(c1.cylinders.size() == 1);
    CHECK(keep_erase(c1, *cat).kept.size() == 1);

    const auto two = hand_config(cat, -10, 0, {cyl(0, -2, 3), cyl(1, -1, 2)});
    ConfigurationSource s2(two);
    const Clan c2 = explore(s2, covering(s2, S(0), 0.0), wall_options(S(0), 0.0));
    REQUIRE(c2.cylinders.size() == 2);
    const auto part = keep_erase(c2, *cat);
    REQUIRE(part.kept.size() == 1);
    CHECK(c2.cylinders[part.kept[0]].birth == -2.0);
    CHECK(c2.cylinders[part.erased[0]].birth == -1.0);
    const auto again = keep_erase(c2, *cat);
    CHECK(again.is_kept == part.is_kept);

    Clan open = c2;
    open.status = ClanStatus::escaped_time;
    CHECK_THROWS_AS(keep_erase(open, *cat), ContractViolation);
  }

  TEST_CASE("free interaction keeps everything") {
    const auto m = make_area_interaction_model(1, {S(0)}, Profile::free());
    const auto env = env_of(m, Region::centered(1, 2), 2.0);
    FreeProcess fp(env, 5);
    ExploreOptions opt = wall_options(S(0), 0.0);
    const Clan c = explore(fp, covering(fp, S(0), 0.0), opt);
    CHECK(keep_erase(c, env.catalog()).erased.empty());
  }

  TEST_CASE("perfect samples") {
    const Region one = Region::centered(1, 0);
    const auto zero = env_of(make_monomer_model(1), one, 0.0);
    const auto ps = perfect_sample(zero, one, {}, 1);
    CHECK(ps.ok());
    CHECK(ps.animals.empty());

    const auto env = env_of(make_monomer_model(1), one, 1.0);
    const int n = 20000;
    int occupied = 0;
    for (int r = 0; r < n; ++r) {
      const auto s = perfect_sample(env, one, {}, static_cast<std::uint64_t>(r));
      REQUIRE(s.ok());
      occupied += !s.animals.empty();
      if (!s.animals.empty()) CHECK(s.animals[0].second == 1);
    }
    CHECK(testing::z_score(double(occupied) / n, 0.5, n) < 2.576);
    CHECK_THROWS_AS(perfect_sample(env, Region::centered(1, 2), {}, 1), RegionMarginError);
  }

  TEST_CASE("escapes report the missing margin") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 2), 0.4);
    bool escaped = false;
    for (std::uint64_t r = 0; r < 50 && !escaped; ++r) {
      const auto s = perfect_sample(env, env.region(), {}, r);
      if (!s.ok()) {
        escaped = true;
        CHECK(s.status == ClanStatus::escaped_space);
        CHECK(s.required_enlargement > 0);
      }
    }
    CHECK(escaped);
  }

  TEST_CASE("clans grow with the rates") {
    // Thin a rate-0.8 realization to rate 0.4 with independent coins.
    const auto env = env_of(make_domino_model(1), Region::centered(1, 6), 0.8);
    for (std::uint64_t r = 0; r < 200; ++r) {
      const auto full = sample_window(env, env.region(), -8.0, 0.0, r);
      auto thin = full;
      thin.cylinders.clear();
      Stream coin(stream_key(r, {123}));
      for (const auto& c : full.cylinders)
        if (coin.uniform() < 0.5) thin.cylinders.push_back(c);
      ConfigurationSource fs(full), ts(thin);
      const Clan cf = explore(fs, covering(fs, S(0), 0.0), wall_options(S(0), 0.0));
      const Clan ct = explore(ts, covering(ts, S(0), 0.0), wall_options(S(0), 0.0));
      for (const auto& c : ct.cylinders)
        CHECK(std::any_of(cf.cylinders.begin(), cf.cylinders.end(), [&](const Cylinder& d) { return d.same(c); }));
    }
  }

  TEST_CASE("cylinders outside the clan do not change the kept set") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 8), 0.3);
    for (std::uint64_t r = 0; r < 100; ++r) {
      auto cfg = sample_window(env, Region::centered(1, 3), -10.0, 0.0, r);
      ConfigurationSource s1(cfg);
      const Clan c1 = explore(s1, covering(s1, S(0), 0.0), wall_options(S(0), 0.0));
      if (c1.status != ClanStatus::closed) continue;
      const auto k1 = keep_erase(c1, env.catalog());
      auto more = cfg;
      more.region = env.region();
      const AnimalId far = *env.catalog().find(0, S(7));
      for (int i = 0; i < 5; ++i) more.cylinders.push_back(cyl(far, -1.0 - i, 3.0, 0.1));
      std::sort(more.cylinders.begin(), more.cylinders.end(), precedes);
      ConfigurationSource s2(more);
      const Clan c2 = explore(s2, covering(s2, S(0), 0.0), wall_options(S(0), 0.0));
      REQUIRE(c2.cylinders.size() == c1.cylinders.size());
      CHECK(keep_erase(c2, env.catalog()).is_kept == k1.is_kept);
    }
  }

  TEST_CASE("clan tails are monotone") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 10), 0.2);
    const auto t = clan_tail_estimates(env, S(0), {{0, 1, 2, 3}, {0.5, 1, 2, 4}}, 2000, 11);
    CHECK(t.closed + t.escaped + t.budget_exceeded == 2000);
    for (std::size_t i = 1; i < t.sd.size(); ++i) CHECK(t.sd[i].estimate.value <= t.sd[i - 1].estimate.value);
    for (std::size_t i = 1; i < t.tl.size(); ++i) CHECK(t.tl[i].estimate.value <= t.tl[i - 1].estimate.value);
  }
}

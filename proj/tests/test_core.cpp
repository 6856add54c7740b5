#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "clansim/animal_model.hpp"
#include "clansim/errors.hpp"
#include "clansim/models.hpp"
#include "clansim/rng.hpp"
#include "clansim/stats.hpp"
#include "helpers.hpp"

using namespace clansim;
using testing::S;

namespace {

std::vector<ModelPtr> builtin_models() {
  return {make_monomer_model(1),
          make_monomer_model(2, 2),
          make_domino_model(2),
          make_area_interaction_model(1, {S(0), S(1)}, Profile::hardcore()),
          make_area_interaction_model(2, {S(0, 0), S(1, 0)}, Profile::geometric(0.5)),
          make_strauss_model(1, 2, Profile::geometric(0.5)),
          make_strauss_model(2, 1, Profile::hardcore()),
          make_loss_network_model(1, 2, 1),
          make_loss_network_model(2, 2, 2),
          make_random_cluster_model(2, 2)};
}

// Brute force of the interaction-matrix definition: does adding b to some ξ drawn from
// `pool` (subsets up to size 2, multiplicity allowed) change M(a|·)?
bool brute_incompatible(const AnimalModel& m, const Animal& a, const Animal& b, const std::vector<Animal>& pool) {
  std::vector<std::vector<const Animal*>> xis{{}};
  for (const auto& p : pool) xis.push_back({&p});
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i; j < pool.size(); ++j) xis.push_back({&pool[i], &pool[j]});
  for (auto xi : xis) {
    const double before = m.acceptance(a, xi);
    xi.push_back(&b);
    if (m.acceptance(a, xi) != before) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("lattice") {
  TEST_CASE("sup-norm distances and diameters") {
    CHECK(sup_distance(S(0, 0), S(3, -5)) == 5);
    CHECK(set_distance({S(0), S(1)}, {S(4), S(9)}) == 3);
    CHECK(diameter({}) == 0);
    CHECK(diameter({S(2, 2)}) == 0);
    CHECK(diameter({S(0, 0), S(1, 3), S(-1, 0)}) == 3);
  }

  TEST_CASE("regions") {
    const Region r = Region::ball(2, S(1, 1), 2.7);
    CHECK(r.lo() == S(-1, -1));
    CHECK(r.hi() == S(3, 3));
    CHECK(r.size() == 25);
    CHECK(r.contains(S(3, -1)));
    CHECK_FALSE(r.contains(S(4, 0)));
    for (std::size_t i = 0; i < r.size(); ++i) CHECK(r.index(r.site_at(i)) == i);
    CHECK(r.distance_to_complement(S(1, 1)) == 3);
    CHECK(r.distance_to_complement(S(3, 1)) == 1);
    CHECK(r.dilated(1) == Region::ball(2, S(1, 1), 3));
    CHECK(Region::centered(1, 4).half_width() == 4);
  }
}

TEST_SUITE("rng") {
  TEST_CASE("streams are pure functions of their key") {
    Stream a(stream_key(7, {1, 2})), b(stream_key(7, {1, 2})), c(stream_key(7, {1, 3}));
    bool differs = false;
    for (int i = 0; i < 10; ++i) {
      const double x = a.uniform();
      CHECK(x == b.uniform());
      differs = differs || x != c.uniform();
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
    CHECK(differs);
    CHECK(derive_seed(5, StreamTag::replica, 1) != derive_seed(5, StreamTag::replica, 2));
  }

  TEST_CASE("exponential draws have unit mean") {
    Stream s(stream_key(11, {}));
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += s.exponential();
    CHECK(std::abs(sum / n - 1.0) < 4.0 / std::sqrt(n));
  }
}

TEST_SUITE("stats") {
  TEST_CASE("normal quantile and intervals") {
    CHECK(normal_quantile_two_sided(0.95) == doctest::Approx(1.959964).epsilon(1e-6));
    const auto e = proportion_estimate(0, 100);
    CHECK(e.value == 0.0);
    CHECK(e.ci_low == 0.0);
    CHECK(e.ci_high > 0.0);
    const std::vector<double> xs{1.0, 2.0, NAN, 3.0};
    const auto m = mean_estimate(xs);
    CHECK(m.value == doctest::Approx(2.0));
    CHECK(m.non_finite == 1);
    CHECK(m.n == 3);
  }

  TEST_CASE("least squares") {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = linear_fit(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK_THROWS(linear_fit(std::vector<double>{1.0}, std::vector<double>{1.0}));
  }

  TEST_CASE("chi-square tails") {
    CHECK(chi_square_sf(3.841459, 1) == doctest::Approx(0.05).epsilon(1e-5));
    const std::vector<std::size_t> obs{25, 25, 50};
    const std::vector<double> p{0.25, 0.25, 0.5};
    CHECK(chi_square_gof(obs, p).p_value == doctest::Approx(1.0));
    const std::vector<std::size_t> a{10, 20, 0}, b{20, 40, 0};
    const auto r = chi_square_two_sample(a, b);
    CHECK(r.dof == 1);
    CHECK(r.p_value == doctest::Approx(1.0));
  }
}

TEST_SUITE("animal_model") {
  TEST_CASE("self-exclusion and range") {
    const auto m = make_monomer_model(1);
    const Animal a = m->make_animal(0, S(0)), b = m->make_animal(0, S(0)), c = m->make_animal(0, S(1));
    CHECK(m->incompatible(a, b));
    CHECK_FALSE(m->incompatible(a, c));
    CHECK(m->geometry().ell1 == 0);
    CHECK(m->geometry().ell2 == 0);
    CHECK(m->halo(a) == std::vector<Site>{S(0)});
  }

  TEST_CASE("animals of different models cannot be compared") {
    const auto m1 = make_monomer_model(1), m2 = make_monomer_model(1);
    const Animal a = m1->make_animal(0, S(0)), b = m2->make_animal(0, S(0));
    CHECK_THROWS_AS(m1->incompatible(a, b), ModelMismatch);
  }

  TEST_CASE("enumerate_containing") {
    const auto mono = make_monomer_model(2);
    const Region r = Region::centered(2, 3);
    const auto one = enumerate_containing(S(1, 1), *mono, r);
    REQUIRE(one.size() == 1);
    CHECK(one[0].support == std::vector<Site>{S(1, 1)});
    CHECK(enumerate_containing(S(1, 1), *make_domino_model(2), r).size() == 4);
    CHECK(enumerate_containing(S(9, 9), *mono, r).empty());
    CHECK(enumerate_containing(S(3, 0), *make_domino_model(2), r).size() == 3);
  }

  TEST_CASE("catalog indices agree with the model") {
    const auto m = make_domino_model(2);
    const AnimalCatalog cat(m, Region::centered(2, 2));
    CHECK(cat.size() == 2 * 4 * 5);
    for (AnimalId i = 0; i < cat.size(); ++i) {
      const auto inc = cat.incompatible_with(i);
      for (AnimalId j = 0; j < cat.size(); ++j) {
        const bool listed = std::find(inc.begin(), inc.end(), j) != inc.end();
        CHECK(listed == m->incompatible(cat.animal(i), cat.animal(j)));
      }
      CHECK(cat.find(cat.animal(i).prototype, cat.animal(i).anchor) == i);
    }
  }

  TEST_CASE("shell width") {
    CHECK(ModelGeometry::default_delta(4) == 12.0);
    CHECK(ModelGeometry::default_delta(0) == 2.0);
    CHECK(ModelGeometry::reference_delta(2, 4) == 3.0);
    CHECK_THROWS(ModelGeometry::reference_delta(1, 4));
    for (int d = 1; d <= 3; ++d)
      for (int ell1 : {0, 1, 2})
        for (int ell2 : {1, 2}) {
          ModelGeometry g{d, ell1, ell2, ell1 + ell2, ModelGeometry::default_delta(ell1 + ell2)};
          CHECK(verify_delta(g, 300, 17));
        }
    ModelGeometry zero{2, 2, 2, 4, 0.0};
    CHECK_FALSE(verify_delta(zero, 10, 1));
    // The reference width 3 for d=2, ell0=4 is too thin: one animal of diameter 2 straddles it.
    ModelGeometry ref{2, 2, 2, 4, ModelGeometry::reference_delta(2, 4)};
    CHECK_FALSE(verify_delta(ref, 2000, 3));
  }

  TEST_CASE("properties of every built-in model") {
    Stream rng(stream_key(99, {}));
    for (const auto& m : builtin_models()) {
      CAPTURE(m->name());
      const int d = m->dim();
      const auto& g = m->geometry();
      const AnimalCatalog cat(m, Region::centered(d, d == 1 ? 6 : 3));
      const auto& all = cat.animals();
      int max_inc = -1;
      for (const auto& a : all) {
        CHECK(a.diameter() <= g.ell1);
        for (const auto& b : all) {
          const bool inc = m->incompatible(a, b);
          CHECK(inc == m->incompatible(b, a));
          if (inc) {
            max_inc = std::max(max_inc, set_distance(a.support, b.support));
            const auto h = m->halo(a);
            CHECK(std::any_of(b.support.begin(), b.support.end(), [&](const Site& s) { return std::binary_search(h.begin(), h.end(), s); }));
          }
        }
      }
      CHECK(max_inc == g.ell2);
      // Locality and acceptance range on random configurations.
      for (int t = 0; t < 200; ++t) {
        const Animal& gam = all[static_cast<std::size_t>(rng.uniform() * all.size())];
        std::vector<const Animal*> xi;
        for (int k = 0; k < 3; ++k) xi.push_back(&all[static_cast<std::size_t>(rng.uniform() * all.size())]);
        const double v = m->acceptance(gam, xi);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        for (const auto& far : all)
          if (set_distance(far.support, gam.support) > g.ell2) {
            auto more = xi;
            more.push_back(&far);
            CHECK(m->acceptance(gam, more) == v);
            break;
          }
      }
    }
  }

  TEST_CASE("closed-form incompatibility matches the interaction-matrix definition") {
    for (const auto& m : builtin_models()) {
      CAPTURE(m->name());
      const int d = m->dim();
      const AnimalCatalog cat(m, Region::centered(d, d == 1 ? 4 : 2));
      const auto& all = cat.animals();
      for (const auto& a : all)
        for (const auto& b : all) {
          std::vector<Animal> pool{b};
          for (const auto& p : all)
            if (set_distance(p.support, a.support) <= m->geometry().ell2 && pool.size() < 6) pool.push_back(p);
          CHECK(brute_incompatible(*m, a, b, pool) == m->incompatible(a, b));
        }
    }
  }
}

TEST_SUITE("models") {
  TEST_CASE("area interaction") {
    const auto free = make_area_interaction_model(1, {S(0), S(1)}, Profile::free());
    CHECK(free->acceptance(free->make_animal(0, S(0)), {}) == 1.0);
    const Animal fa = free->make_animal(0, S(0));
    const Animal* fp[] = {&fa, &fa};
    CHECK(free->acceptance(fa, fp) == 1.0);

    const auto g = make_area_interaction_model(1, {S(0), S(1)}, Profile::hardcore());
    const Animal a = g->make_animal(0, S(0)), near = g->make_animal(0, S(1)), far = g->make_animal(0, S(2));
    CHECK(g->incompatible(a, near));
    CHECK_FALSE(g->incompatible(a, far));
    const Animal* p1[] = {&near};
    const Animal* p2[] = {&far};
    CHECK(g->acceptance(a, p1) == 0.0);
    CHECK(g->acceptance(a, p2) == 1.0);

    const auto single = make_area_interaction_model(1, {S(0)}, Profile::hardcore());
    CHECK(single->incompatible(single->make_animal(0, S(3)), single->make_animal(0, S(3))));
    CHECK_FALSE(single->incompatible(single->make_animal(0, S(3)), single->make_animal(0, S(4))));
    CHECK_THROWS(Profile::from_table({0.5, 1.5}));
  }

  TEST_CASE("strauss thinning") {
    const auto m = make_strauss_model(1, 2, Profile::geometric(0.5));
    CHECK(m->geometry().ell2 == 2);
    const Animal x = m->make_animal(0, S(0)), y = m->make_animal(0, S(2)), z = m->make_animal(0, S(3));
    const Animal* one[] = {&y};
    const Animal* out[] = {&z};
    const double M = m->acceptance(x, one);
    CHECK(M == 0.5);
    CHECK(m->acceptance(x, out) == 1.0);
    Stream rng(stream_key(4, {}));
    const int n = 10000;
    int accepted = 0;
    for (int i = 0; i < n; ++i) accepted += rng.uniform() <= M;
    CHECK(testing::z_score(static_cast<double>(accepted) / n, 0.5, n) < 3.0);

    const auto free = make_strauss_model(1, 2, Profile::free());
    CHECK(free->acceptance(x.model_uid == free->uid() ? x : free->make_animal(0, S(0)), {}) == 1.0);
    const auto hard = make_strauss_model(1, 2, Profile::hardcore());
    const Animal hx = hard->make_animal(0, S(0)), hy = hard->make_animal(0, S(2));
    const Animal* hp[] = {&hy};
    CHECK(hard->acceptance(hx, hp) == 0.0);
  }

  TEST_CASE("loss network") {
    const auto m = make_loss_network_model(1, 1, 1);
    const AnimalCatalog cat(m, Region::centered(1, 3));
    CHECK(cat.size() == 6);
    const Animal a = m->make_animal(0, S(0)), b = m->make_animal(0, S(0)), c = m->make_animal(0, S(1));
    CHECK(m->incompatible(a, b));
    CHECK_FALSE(m->incompatible(a, c));
    const auto unlimited = make_loss_network_model(1, 2, 0);
    const Animal u = unlimited->make_animal(0, S(0));
    const Animal* many[] = {&u, &u, &u};
    CHECK(unlimited->acceptance(u, many) == 1.0);

    // Capacity one everywhere is exclusion on link sets.
    const auto l2 = make_loss_network_model(2, 2, 1);
    const AnimalCatalog c2(l2, Region::centered(2, 1));
    for (const auto& p : c2.animals())
      for (const auto& q : c2.animals()) {
        std::vector<Link> common;
        std::set_intersection(p.links.begin(), p.links.end(), q.links.begin(), q.links.end(), std::back_inserter(common));
        CHECK(l2->incompatible(p, q) == !common.empty());
        const Animal* present[] = {&q};
        CHECK(l2->acceptance(p, present) == (common.empty() ? 1.0 : 0.0));
      }
    const std::map<Link, int> over{{Link::make(S(0), S(1)), 2}};
    const auto lo = make_loss_network_model(1, 1, 1, over);
    CHECK(dynamic_cast<const LossNetworkModel&>(*lo).capacity(Link::make(S(0), S(1))) == 2);
  }

  TEST_CASE("random cluster weights") {
    CHECK(random_cluster_weight({1.0, 1.0}, {0.5}) == doctest::Approx(1.0));
    CHECK(random_cluster_weight({1.0}, {}) == doctest::Approx(1.0));
    CHECK(random_cluster_weight({2.0, 2.0}, {1.0 / 3.0}) == doctest::Approx(0.125));
    CHECK_THROWS_AS(random_cluster_weight({1.0, 1.0}, {1.0}), std::domain_error);
    CHECK_THROWS_AS(random_cluster_weight({1.0, 1.0}, {0.0}), std::domain_error);
    CHECK_THROWS_AS(random_cluster_weight({0.0}, {}), std::domain_error);
    const auto m = make_random_cluster_model(2, 1);
    const AnimalCatalog cat(m, Region::centered(2, 1));
    CHECK(cat.size() == 9 + 12);
  }

  TEST_CASE("connected link sets") {
    CHECK(connected_link_sets(1, 2).size() == 2);
    CHECK(connected_link_sets(2, 1).size() == 2);
    CHECK(connected_link_sets(2, 2).size() == 2 + 6);
  }
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "clansim/errors.hpp"
#include "clansim/experiments.hpp"
#include "helpers.hpp"

using namespace clansim;
using nlohmann::json;
using testing::env_of;
using testing::S;

namespace fs = std::filesystem;

namespace {

json base_config(const std::string& command) {
  return json{{"command", command},
              {"model", {{"name", "monomer"}, {"dim", 1}}},
              {"disorder", {{"site", {{"family", "degenerate"}, {"params", {1.0}}}}, {"scale", 0.5}}},
              {"region", {{"lo", {-3}}, {"hi", {3}}}},
              {"replicas", 20},
              {"seed", 11}};
}

std::string pointer_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<accepted>";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("clansim_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("experiments") {
  TEST_CASE("config validation reports pointers") {
    CHECK(pointer_of(base_config("sample")) == "<accepted>");
    auto j = base_config("sample");
    j["bogus"] = 1;
    CHECK(pointer_of(j) == "/bogus");
    j = base_config("sample");
    j["model"]["name"] = "ising";
    CHECK(pointer_of(j) == "/model/name");
    j = base_config("sample");
    j["disorder"]["scale"] = -1;
    CHECK(pointer_of(j) == "/disorder/scale");
    j = base_config("sample");
    j["region"]["hi"] = {1, 2};
    CHECK(pointer_of(j) == "/region/hi");
    j = base_config("nonsense");
    CHECK(pointer_of(j) == "/command");
    j = base_config("clan-stats");
    j["params"] = {{"L", {0, 1, "x"}}};
    CHECK(pointer_of(j).rfind("/params/L", 0) == 0);
  }

  TEST_CASE("config echo round-trips and hashes stably") {
    for (const auto& cmd : subcommands()) {
      CAPTURE(cmd);
      auto j = base_config(cmd);
      if (cmd == "regularity") j["region"] = {{"lo", {-12}}, {"hi", {12}}};
      const auto cfg = parse_config(j);
      const auto echo = config_echo(cfg);
      const auto again = parse_config(echo);
      CHECK(config_echo(again) == echo);
      CHECK(config_hash(again) == config_hash(cfg));
      auto other = j;
      other["seed"] = 12;
      CHECK(config_hash(parse_config(other)) != config_hash(cfg));
      auto exec = j;
      exec["workers"] = 3;
      exec["out"] = "/tmp/elsewhere";
      CHECK(config_hash(parse_config(exec)) == config_hash(cfg));
    }
  }

  TEST_CASE("sample with zero rates writes an empty configuration") {
    auto j = base_config("sample");
    j["disorder"]["scale"] = 0.0;
    auto cfg = parse_config(j);
    cfg.out = scratch("zero");
    const auto res = run(cfg);
    const auto csv = slurp(cfg.out / "sample.csv");
    CHECK(csv.rfind("# command=sample config_hash=", 0) == 0);
    CHECK(csv.substr(csv.find('\n') + 1) == "replica,animal,prototype,anchor,kind,multiplicity\n");
    CHECK(res.summary["config_hash"].get<std::string>().size() == 16);
    CHECK(fs::exists(cfg.out / "metadata.json"));
    fs::remove_all(cfg.out);
  }

  TEST_CASE("artifacts are byte-identical across runs and worker counts") {
    for (const auto& cmd : {"sample", "clan-stats", "connectivity"}) {
      CAPTURE(std::string(cmd));
      auto j = base_config(cmd);
      j["replicas"] = 100;
      auto cfg = parse_config(j);
      cfg.out = scratch("a");
      run(cfg);
      auto cfg4 = cfg;
      cfg4.out = scratch("b");
      cfg4.workers = 4;
      run(cfg4);
      for (const auto& ext : {".csv", ".json"}) {
        const auto name = std::string(cmd) + ext;
        CHECK(slurp(cfg.out / name) == slurp(cfg4.out / name));
        CHECK_FALSE(slurp(cfg.out / name).empty());
      }
      fs::remove_all(cfg.out);
      fs::remove_all(cfg4.out);
    }
  }

  TEST_CASE("disorder-check reports the d=1 threshold") {
    auto cfg = parse_config(base_config("disorder-check"));
    cfg.out = scratch("dc");
    const auto res = run(cfg);
    CHECK(std::abs(res.summary["results"]["a_threshold"].get<double>() - 5.828427) < 5e-7);
    fs::remove_all(cfg.out);
  }

  TEST_CASE("multiscale estimates only the scales that fit") {
    auto j = base_config("multiscale");
    j["region"] = {{"lo", {-20}}, {"hi", {20}}};
    j["replicas"] = 30;
    j["params"] = {{"mc_replicas", 20}, {"scales", 3}};
    auto cfg = parse_config(j);
    cfg.out = scratch("ms");
    const auto res = run(cfg);
    std::istringstream csv(slurp(cfg.out / "multiscale.csv"));
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(csv, line)) rows.push_back(line);
    REQUIRE(rows.size() == 5);
    CHECK(rows[1] == "k,L,log10_T,estimate,ci_low,ci_high,target");
    CHECK(rows[2].rfind("0,10,", 0) == 0);
    CHECK(rows[2].back() != ',');
    CHECK(rows[3].substr(rows[3].size() - 4) == ",,,,");
    CHECK(res.summary["results"]["simulated_scales"].size() == 1);
    fs::remove_all(cfg.out);
  }

  TEST_CASE("csv numbers reparse exactly") {
    for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) CHECK(std::stod(csv_number(v)) == v);
  }
}

TEST_SUITE("ctmc oracle") {
  TEST_CASE("single hard-core site") {
    const AnimalCatalog cat(make_monomer_model(1), Region::centered(1, 0));
    const std::vector<double> w{1.0};
    const auto sol = ctmc_stationary(cat, w);
    REQUIRE(sol.states.size() == 2);
    CHECK(sol.pi[sol.find({0})] == doctest::Approx(0.5));
    CHECK(sol.pi[sol.find({1})] == doctest::Approx(0.5));
    CHECK(sol.residual < 1e-10);
    CHECK(sol.max_row_sum < 1e-12);
  }

  TEST_CASE("two mutually exclusive animals") {
    const AnimalCatalog cat(make_monomer_model(1, 2), Region::centered(1, 0));
    REQUIRE(cat.size() == 2);
    const std::vector<double> w{1.0, 2.0};
    const auto sol = ctmc_stationary(cat, w);
    REQUIRE(sol.states.size() == 3);
    CHECK(sol.pi[sol.find({0, 0})] == doctest::Approx(0.25));
    CHECK(sol.pi[sol.find({1, 0})] == doctest::Approx(0.25));
    CHECK(sol.pi[sol.find({0, 1})] == doctest::Approx(0.5));
    CHECK(sol.find({1, 1}) == -1);
  }

  TEST_CASE("free animal gives a truncated Poisson law") {
    const AnimalCatalog cat(make_area_interaction_model(1, {S(0)}, Profile::free()), Region::centered(1, 0));
    const double w = 1.3;
    const int cap = 6;
    const std::vector<double> rates{w};
    const auto sol = ctmc_stationary(cat, rates, 12, cap);
    REQUIRE(sol.states.size() == cap + 1);
    double norm = 0.0;
    for (int n = 0; n <= cap; ++n) norm += std::pow(w, n) / std::tgamma(n + 1.0);
    for (int n = 0; n <= cap; ++n) CHECK(sol.pi[sol.find({n})] == doctest::Approx(std::pow(w, n) / std::tgamma(n + 1.0) / norm));
    CHECK(sol.residual < 1e-10);
  }

  TEST_CASE("state-space cap") {
    const AnimalCatalog cat(make_monomer_model(1), Region::centered(1, 2));
    const std::vector<double> w(cat.size(), 1.0);
    CHECK_THROWS_AS(ctmc_stationary(cat, w), StateSpaceOverflow);
    CHECK(ctmc_stationary(cat, w, 32).states.size() == 32);
  }
}

TEST_SUITE("tail table") {
  TEST_CASE("zero rates give an all-zero table") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 10), 0.0);
    const auto rep = tail_table(env, S(0), {{0, 1, 2}, {0.5, 1.0}}, 200, 1, 1.5);
    for (const auto& r : rep.table.sd) CHECK(r.estimate.value == 0.0);
    for (const auto& r : rep.table.tl) CHECK(r.estimate.value == 0.0);
    CHECK(rep.q == 1.5);
    CHECK(rep.to_json()["q"] == 1.5);
  }

  TEST_CASE("subcritical spatial tail decays") {
    const auto env = env_of(make_domino_model(1), Region::centered(1, 30), 0.3);
    const auto rep = tail_table(env, S(0), {{1, 2, 3, 4, 5}, {0.5, 1.0, 2.0, 4.0}}, 4000, 2, 1.0018);
    CHECK(rep.sd_fit.points >= 2);
    CHECK(rep.sd_fit.slope < 0.0);
    CHECK(rep.tl_fit.slope < 0.0);
    std::ostringstream os;
    rep.write_csv(os);
    CHECK(os.str().rfind("quantity,threshold,abscissa,estimate,ci_low,ci_high,n,q,fit_slope\n", 0) == 0);
  }
}

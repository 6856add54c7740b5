#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "clansim/errors.hpp"
#include "clansim/experiments.hpp"

namespace {

using nlohmann::json;

int fail(const std::string& kind, const std::string& message, const std::string& pointer = "", int code = 1) {
  json err{{"error", kind}, {"message", message}};
  if (!pointer.empty()) err["pointer"] = pointer;
  std::cerr << err.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clan-of-ancestors simulator for interacting animal processes in random environments"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  for (const auto& name : clansim::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides the config)");
    sub->add_option("--replicas", replicas, "Replica count (overrides the config)");
    sub->add_option("--out", out, "Output directory (overrides the config and CLANSIM_OUT)");
    sub->add_option("--workers", workers, "Worker threads; never changes results")->check(CLI::Range(1u, 256u));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", e.what(), "", 2);
  }
  const std::string command = app.get_subcommands().front()->get_name();

  json j;
  try {
    std::ifstream in(config_path);
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    return fail("config", std::string("invalid JSON: ") + e.what(), "", 2);
  }
  if (!j.is_object()) return fail("config", "expected an object", "/", 2);
  if (j.contains("command") && j["command"] != command)
    return fail("config", "config is for '" + j["command"].dump() + "', not '" + command + "'", "/command", 2);
  j["command"] = command;
  if (seed) j["seed"] = *seed;
  if (replicas) j["replicas"] = *replicas;
  if (workers) j["workers"] = *workers;
  if (out) {
    j["out"] = *out;
  } else if (!j.contains("out")) {
    const char* env = std::getenv("CLANSIM_OUT");
    j["out"] = env && *env ? env : "clansim_out";
  }

  try {
    const auto cfg = clansim::parse_config(j);
    const auto res = clansim::run(cfg);
    json done{{"status", "ok"}, {"command", command}, {"config_hash", res.summary["config_hash"]}, {"artifacts", json::array()}};
    for (const auto& p : res.artifacts) done["artifacts"].push_back(p.string());
    std::cout << done.dump() << '\n';
    return 0;
  } catch (const clansim::ConfigError& e) {
    return fail("config", e.message(), e.pointer(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what());
  }
}

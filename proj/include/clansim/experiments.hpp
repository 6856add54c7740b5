#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "clansim/clan_engine.hpp"
#include "clansim/environment.hpp"
#include "clansim/models.hpp"

namespace clansim {

inline constexpr const char* kVersion = "1.0.0";

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"sample", "clan-stats", "connectivity", "regularity", "multiscale", "disorder-check"};
  return names;
}

/// Validated experiment description. `model`, `disorder` and `params` are kept in their
/// normalized JSON form (defaults filled in) so the echo re-validates.
struct ExperimentConfig {
  std::string command;
  nlohmann::json model;
  nlohmann::json disorder;
  Region region;
  nlohmann::json params = nlohmann::json::object();
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  // Execution settings; they never change results and are not part of the echo.
  std::filesystem::path out = ".";
  unsigned workers = 1;
};

/// Parses and validates a config. Every error is a ConfigError carrying the JSON pointer
/// of the offending value; unknown keys are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);

/// Normalized config (without execution settings); parse_config accepts it back.
nlohmann::json config_echo(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

ModelPtr build_model(const nlohmann::json& j, const std::string& pointer = "/model");
DisorderSpec build_disorder(const nlohmann::json& j, const std::string& pointer = "/disorder");

struct RunResult {
  std::vector<std::filesystem::path> artifacts;
  nlohmann::json summary;
};

/// Runs the subcommand and writes `<command>.csv`, `<command>.json` and `metadata.json`
/// into cfg.out. Only metadata.json carries a timestamp.
RunResult run(const ExperimentConfig& cfg);

/// Fixed-width float formatting used in every CSV (17 significant digits).
std::string csv_number(double v);

class StateSpaceOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stationary law of the finite interacting birth-death chain on the animals of a catalog:
/// birth of γ at rate M(γ|η)w(γ), death at rate η(γ). States are multiplicity vectors
/// reachable from the empty configuration, each multiplicity capped at `max_multiplicity`
/// (0 = no cap); more than `max_states` reachable states throws StateSpaceOverflow.
struct CtmcSolution {
  std::vector<std::vector<int>> states;  // multiplicity per catalog animal
  std::vector<double> pi;
  double residual = 0.0;  // ‖πA‖∞
  double max_row_sum = 0.0;
  /// Index of a state, or -1.
  long find(const std::vector<int>& state) const;
};

CtmcSolution ctmc_stationary(const AnimalCatalog& catalog, std::span<const double> rates, std::size_t max_states = 12,
                             int max_multiplicity = 0);

/// Clan tails plus fits of log P(SD > L) against L and of log P(TL > T) against
/// ln^q(1+T). Only thresholds with positive estimates enter the fits.
struct TailReport {
  TailTable table;
  double q = 1.0;
  LinearFit sd_fit;
  LinearFit tl_fit;
  void write_csv(std::ostream& os) const;
  nlohmann::json to_json() const;
};

TailReport tail_table(const Environment& env, const Site& x, const TailThresholds& thresholds, std::size_t replicas, std::uint64_t seed,
                      double q, const ClanLimits& limits = {}, unsigned workers = 1);

}  // namespace clansim

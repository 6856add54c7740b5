#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clansim/free_process.hpp"
#include "clansim/stats.hpp"

namespace clansim {

enum class ClanStatus { closed, escaped_space, escaped_time, budget_exceeded };
std::string to_string(ClanStatus s);

struct ClanLimits {
  /// Sup distance from the exploration centre; unset means the window half-width for point
  /// clans and unbounded for perfect sampling.
  std::optional<int> max_radius;
  double max_depth_time = std::numeric_limits<double>::infinity();
  std::size_t max_cylinders = 1'000'000;
  /// Treat the environment window as the whole lattice (finite-volume dynamics). Otherwise
  /// any cylinder that could interact with animals outside the window is an escape.
  bool region_is_wall = false;
};

struct ClanStats {
  double tl = 0.0;
  int sd = 0;
  std::size_t ss = 0;
  std::size_t n_cylinders = 0;
  std::size_t n_generations = 0;
};

struct Clan {
  ClanStatus status = ClanStatus::closed;
  bool stopped = false;  // the visitor asked to stop before exhaustion
  double t_ref = 0.0;
  std::vector<Cylinder> cylinders;                   // discovery order; roots first
  std::vector<std::uint32_t> generation;             // 1 for roots
  std::vector<std::vector<std::uint32_t>> ancestors; // first-generation ancestors (indices)
  std::size_t n_roots = 0;
  int escape_deficit = 0;  // how many more sites of margin the window would have needed
  ClanStats stats;

  /// Members grouped by generation (index 0 = roots).
  std::vector<std::vector<std::uint32_t>> generations() const;
};

/// Exploration centre and limits with defaults resolved. `visit` is called on each newly
/// discovered cylinder; returning true stops the exploration.
struct ExploreOptions {
  Site center{};
  double t_ref = 0.0;
  ClanLimits limits;
  std::function<bool(const Cylinder&)> visit;
  /// A cylinder whose birth was clipped by a window bottom ends the exploration.
  bool truncation_is_escape = true;
  /// Require strictly earlier births for ancestors (open-path convention) instead of the
  /// lexicographic tie-break.
  bool strict_births = false;
};

/// Breadth-first backward exploration of the joint clan of `roots`.
Clan explore(CylinderSource& source, std::vector<Cylinder> roots, const ExploreOptions& options);

/// Incompatible cylinders alive at Birth(c) that precede c.
std::vector<Cylinder> first_generation(CylinderSource& source, const Cylinder& c, bool strict_births = false);

/// Cylinders whose basis contains x and whose life contains t.
std::vector<Cylinder> covering(CylinderSource& source, const Site& x, double t);

/// Clan of the space-time point (x, t).
Clan clan_of_point(CylinderSource& source, const Site& x, double t, const ClanLimits& limits = {});
/// Same on the stationary free process of `env` drawn with `seed` (top time t).
Clan clan_of_point(const Environment& env, const Site& x, double t, const ClanLimits& limits, std::uint64_t seed);

struct KeepErasePartition {
  std::vector<std::uint32_t> kept;
  std::vector<std::uint32_t> erased;
  std::vector<bool> is_kept;  // by clan index
};

/// Cleaning recursion on a closed clan. Throws ContractViolation otherwise.
KeepErasePartition keep_erase(const Clan& clan, const AnimalCatalog& catalog);

struct PerfectSample {
  ClanStatus status = ClanStatus::closed;
  std::vector<std::pair<AnimalId, int>> animals;  // sorted by id, multiplicity > 0
  std::size_t clan_size = 0;
  int required_enlargement = 0;
  bool ok() const { return status == ClanStatus::closed; }
};

/// Configuration at time 0 of the stationary interacting process, restricted to the
/// animals with basis inside `lambda`.
PerfectSample perfect_sample(const Environment& env, const Region& lambda, const ClanLimits& limits, std::uint64_t seed);

struct TailThresholds {
  std::vector<int> L;
  std::vector<double> T;
};

struct TailRow {
  double threshold = 0.0;
  Estimate estimate;
};

struct TailTable {
  std::vector<TailRow> sd;  // P(SD > L)
  std::vector<TailRow> tl;  // P(TL > T)
  Estimate ss_mean;
  std::size_t replicas = 0;
  std::size_t closed = 0;
  std::size_t escaped = 0;
  std::size_t budget_exceeded = 0;
};

/// Empirical clan tails of (x, 0) over independent free-process realizations. Only closed
/// clans enter the estimates; the others are counted.
TailTable clan_tail_estimates(const Environment& env, const Site& x, const TailThresholds& thresholds, std::size_t replicas,
                              std::uint64_t seed, const ClanLimits& limits = {}, unsigned workers = 1);

}  // namespace clansim

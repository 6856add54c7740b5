#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <unordered_map>
#include <vector>

#include "clansim/environment.hpp"

namespace clansim {

/// Space-time object of the free process: animal `animal` alive on [birth, birth+lifetime].
struct Cylinder {
  AnimalId animal = 0;
  double birth = 0.0;
  double lifetime = 0.0;
  double mark = 0.0;
  std::uint32_t block = 0;  // generation block inside the animal's stream
  std::uint32_t draw = 0;   // index inside the block
  bool truncated = false;   // true birth lies before the window bottom

  double death() const { return birth + lifetime; }
  /// Closed life interval.
  bool alive_at(double t) const { return birth <= t && t <= death(); }
  bool same(const Cylinder& o) const { return animal == o.animal && block == o.block && draw == o.draw; }
};

/// Total order used for ties: (birth, animal id, block, draw).
bool precedes(const Cylinder& a, const Cylinder& b);

/// Something the clan engine can query for cylinders alive at a given time.
class CylinderSource {
 public:
  virtual ~CylinderSource() = default;
  virtual const AnimalCatalog& catalog() const = 0;
  /// Appends the cylinders of `animal` whose life contains t.
  virtual void alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) = 0;
};

/// Stationary free process on (-∞, t_top], generated lazily per animal.
///
/// Cylinders alive at t_top are drawn from the M/M/∞ stationary law (Poisson count, Exp(1)
/// age, Exp(1) residual). Cylinders that died before t_top come from the reversed process:
/// deaths form a rate-w Poisson process, generated in unit blocks going backward, each with
/// an Exp(1) lifetime. Every block has its own counter stream keyed by (seed, animal, block),
/// so looking further into the past extends the same realization and never truncates.
class FreeProcess final : public CylinderSource {
 public:
  FreeProcess(const Environment& env, std::uint64_t seed, double t_top = 0.0);

  const AnimalCatalog& catalog() const override { return env_.catalog(); }
  const Environment& environment() const { return env_; }
  double top() const { return t_top_; }
  std::uint64_t seed() const { return seed_; }

  void alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) override;
  /// Appends every cylinder of `animal` whose life meets [a, b] (b <= top).
  void meeting(AnimalId animal, double a, double b, std::vector<Cylinder>& out);

 private:
  struct Lazy {
    std::vector<Cylinder> cylinders;
    std::vector<std::size_t> block_end;  // block_end[k] = end of block k in `cylinders`
  };
  Lazy& ensure(AnimalId animal, double t);
  void generate_block(AnimalId animal, Lazy& lazy, std::uint32_t block);

  const Environment& env_;
  std::uint64_t seed_;
  double t_top_;
  std::unordered_map<AnimalId, Lazy> cache_;
};

/// Realized cylinders of a finite space-time window.
struct CylinderConfiguration {
  std::shared_ptr<const AnimalCatalog> catalog;
  Region region;
  double t0 = 0.0;
  double t1 = 0.0;
  std::uint64_t seed = 0;
  std::vector<Cylinder> cylinders;  // sorted by `precedes`

  bool truncated() const;
  const Animal& basis(const Cylinder& c) const { return catalog->animal(c.animal); }
};

/// Restriction of the stationary free process to the animals inside `region` and the time
/// window [t0, t1]. Lives are clipped to the window; cylinders born before t0 are recorded
/// with birth t0 and the truncation flag.
CylinderConfiguration sample_window(const Environment& env, const Region& region, double t0, double t1, std::uint64_t seed);

/// Keeps cylinders with basis inside `box` and clips their lives to [a, b].
CylinderConfiguration restrict(const CylinderConfiguration& config, const Region& box, double a, double b);

/// Cylinders alive at t (closed intervals), in configuration order.
std::vector<Cylinder> alive_at(const CylinderConfiguration& config, double t);

/// Line format: header lines starting with '#', then `basis_id birth lifetime mark truncated`.
void write_text(const CylinderConfiguration& config, std::ostream& os);

/// Eager configuration exposed through the source interface.
class ConfigurationSource final : public CylinderSource {
 public:
  explicit ConfigurationSource(const CylinderConfiguration& config);
  const AnimalCatalog& catalog() const override { return *config_.catalog; }
  void alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) override;

 private:
  const CylinderConfiguration& config_;
  std::unordered_map<AnimalId, std::vector<std::size_t>> by_animal_;
};

/// The free process restricted to animals inside `region` and times [t0, t1], generated
/// lazily. Yields the same cylinders as sample_window with the same seed.
class BoxedSource final : public CylinderSource {
 public:
  BoxedSource(const Environment& env, const Region& region, double t0, double t1, std::uint64_t seed);
  const AnimalCatalog& catalog() const override { return fp_.catalog(); }
  void alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) override;

 private:
  bool inside(AnimalId animal);

  FreeProcess fp_;
  Region region_;
  double t0_;
  std::unordered_map<AnimalId, bool> inside_;
  std::vector<Cylinder> buf_;
};

}  // namespace clansim

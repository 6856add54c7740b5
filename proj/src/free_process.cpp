#include "clansim/free_process.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "clansim/errors.hpp"

namespace clansim {

bool precedes(const Cylinder& a, const Cylinder& b) {
  if (a.birth != b.birth) return a.birth < b.birth;
  if (a.animal != b.animal) return a.animal < b.animal;
  if (a.block != b.block) return a.block < b.block;
  return a.draw < b.draw;
}

FreeProcess::FreeProcess(const Environment& env, std::uint64_t seed, double t_top) : env_(env), seed_(seed), t_top_(t_top) {
  if (!std::isfinite(t_top)) throw std::invalid_argument("free process top time must be finite");
}

void FreeProcess::generate_block(AnimalId animal, Lazy& lazy, std::uint32_t block) {
  const double w = env_.rate(animal);
  if (!std::isfinite(w)) throw RateOverflow("animal birth rate is not finite");
  Stream rng(stream_key(seed_, {static_cast<std::uint64_t>(StreamTag::free_process), env_.catalog().stable_key(animal), block}));
  std::uint32_t draw = 0;
  if (w > 0) {
    // Poisson(w) points on a unit interval, counted with exponential gaps.
    for (double pos = rng.exponential(w); pos <= 1.0; pos += rng.exponential(w)) {
      Cylinder c;
      c.animal = animal;
      c.block = block;
      c.draw = draw++;
      if (block == 0) {
        const double age = rng.exponential();
        const double residual = rng.exponential();
        c.birth = t_top_ - age;
        c.lifetime = age + residual;
      } else {
        const double death = t_top_ - (block - 1) - pos;
        c.lifetime = rng.exponential();
        c.birth = death - c.lifetime;
      }
      c.mark = rng.uniform();
      lazy.cylinders.push_back(c);
    }
  }
  lazy.block_end.push_back(lazy.cylinders.size());
}

FreeProcess::Lazy& FreeProcess::ensure(AnimalId animal, double t) {
  if (t > t_top_) throw std::logic_error("free process queried above its top time");
  if (animal >= env_.catalog().size()) throw std::out_of_range("animal id outside the catalog");
  Lazy& lazy = cache_[animal];
  const double depth = t_top_ - t;
  const auto needed = static_cast<std::uint32_t>(std::floor(depth)) + 2;  // block 0 plus death blocks reaching t
  while (lazy.block_end.size() < needed) generate_block(animal, lazy, static_cast<std::uint32_t>(lazy.block_end.size()));
  return lazy;
}

void FreeProcess::alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) { meeting(animal, t, t, out); }

void FreeProcess::meeting(AnimalId animal, double a, double b, std::vector<Cylinder>& out) {
  if (env_.rate(animal) == 0.0) return;
  Lazy& lazy = ensure(animal, a);
  const auto last = static_cast<std::size_t>(std::floor(t_top_ - a)) + 1;
  const std::size_t end = lazy.block_end[std::min(last, lazy.block_end.size() - 1)];
  for (std::size_t i = 0; i < end; ++i) {
    const Cylinder& c = lazy.cylinders[i];
    if (c.birth <= b && c.death() >= a) out.push_back(c);
  }
}

bool CylinderConfiguration::truncated() const {
  return std::any_of(cylinders.begin(), cylinders.end(), [](const Cylinder& c) { return c.truncated; });
}

CylinderConfiguration sample_window(const Environment& env, const Region& region, double t0, double t1, std::uint64_t seed) {
  if (!(t0 < t1)) throw std::invalid_argument("sample_window needs t0 < t1");
  if (!env.region().contains(region)) throw std::invalid_argument("window region must lie inside the environment window");
  const auto ids = env.catalog().animals_within(region);
  double total = 0.0;
  for (AnimalId id : ids) total += env.rate(id);
  if (!std::isfinite(total)) throw RateOverflow("total birth rate over the window is not finite");

  CylinderConfiguration cfg;
  cfg.catalog = env.catalog_ptr();
  cfg.region = region;
  cfg.t0 = t0;
  cfg.t1 = t1;
  cfg.seed = seed;
  FreeProcess fp(env, seed, t1);
  for (AnimalId id : ids) fp.meeting(id, t0, t1, cfg.cylinders);
  for (auto& c : cfg.cylinders) {
    const double death = std::min(c.death(), t1);
    if (c.birth < t0) {
      c.birth = t0;
      c.truncated = true;
    }
    c.lifetime = death - c.birth;
  }
  std::sort(cfg.cylinders.begin(), cfg.cylinders.end(), precedes);
  return cfg;
}

CylinderConfiguration restrict(const CylinderConfiguration& config, const Region& box, double a, double b) {
  if (!config.region.contains(box) || a < config.t0 || b > config.t1 || a > b)
    throw std::invalid_argument("restriction box must lie inside the configuration window");
  CylinderConfiguration out;
  out.catalog = config.catalog;
  out.region = box;
  out.t0 = a;
  out.t1 = b;
  out.seed = config.seed;
  for (const auto& c : config.cylinders) {
    if (!box.contains_all(config.basis(c).support)) continue;
    const double tI = std::max(c.birth, a);
    const double sI = std::min(c.death(), b) - tI;
    if (sI < 0) continue;
    Cylinder r = c;
    if (tI > c.birth) r.truncated = true;
    r.birth = tI;
    r.lifetime = sI;
    out.cylinders.push_back(r);
  }
  std::sort(out.cylinders.begin(), out.cylinders.end(), precedes);
  return out;
}

std::vector<Cylinder> alive_at(const CylinderConfiguration& config, double t) {
  std::vector<Cylinder> out;
  for (const auto& c : config.cylinders)
    if (c.alive_at(t)) out.push_back(c);
  return out;
}

void write_text(const CylinderConfiguration& config, std::ostream& os) {
  const auto old = os.precision(17);
  os << "# window " << config.region.str() << " [" << config.t0 << ", " << config.t1 << "]\n";
  os << "# seed " << config.seed << "\n";
  os << "# basis_id birth lifetime mark truncated\n";
  for (const auto& c : config.cylinders)
    os << c.animal << ' ' << c.birth << ' ' << c.lifetime << ' ' << c.mark << ' ' << (c.truncated ? 1 : 0) << '\n';
  os.precision(old);
}

ConfigurationSource::ConfigurationSource(const CylinderConfiguration& config) : config_(config) {
  for (std::size_t i = 0; i < config.cylinders.size(); ++i) by_animal_[config.cylinders[i].animal].push_back(i);
}

void ConfigurationSource::alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) {
  auto it = by_animal_.find(animal);
  if (it == by_animal_.end()) return;
  for (std::size_t i : it->second)
    if (config_.cylinders[i].alive_at(t)) out.push_back(config_.cylinders[i]);
}

BoxedSource::BoxedSource(const Environment& env, const Region& region, double t0, double t1, std::uint64_t seed)
    : fp_(env, seed, t1), region_(region), t0_(t0) {
  if (!(t0 < t1)) throw std::invalid_argument("boxed source needs t0 < t1");
  if (!env.region().contains(region)) throw std::invalid_argument("box region must lie inside the environment window");
}

bool BoxedSource::inside(AnimalId animal) {
  auto [it, fresh] = inside_.try_emplace(animal, false);
  if (fresh) it->second = region_.contains_all(fp_.catalog().animal(animal).support);
  return it->second;
}

void BoxedSource::alive_at(AnimalId animal, double t, std::vector<Cylinder>& out) {
  if (t < t0_ || t > fp_.top() || !inside(animal)) return;
  buf_.clear();
  fp_.alive_at(animal, t, buf_);
  for (auto c : buf_) {
    const double death = std::min(c.death(), fp_.top());
    if (c.birth < t0_) {
      c.birth = t0_;
      c.truncated = true;
    }
    c.lifetime = death - c.birth;
    out.push_back(c);
  }
}

}  // namespace clansim

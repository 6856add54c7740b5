#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace clansim {

inline constexpr int kMaxDim = 3;

/// A point of Z^d. Coordinates beyond the model dimension stay zero.
struct Site {
  std::array<int, kMaxDim> c{};

  friend auto operator<=>(const Site&, const Site&) = default;
  friend bool operator==(const Site&, const Site&) = default;

  Site operator+(const Site& o) const {
    Site r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Site operator-(const Site& o) const {
    Site r;
    for (int i = 0; i < kMaxDim; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Site operator-() const { return Site{} - *this; }

  static Site unit(int axis) {
    Site s;
    s.c[axis] = 1;
    return s;
  }
  std::string str(int dim) const;
};

/// Sup-norm distance, the metric used throughout.
int sup_distance(const Site& a, const Site& b);

/// Distance between two finite site sets.
int set_distance(const std::vector<Site>& a, const std::vector<Site>& b);

/// Sup-norm diameter of a finite site set (0 for empty or singletons).
int diameter(const std::vector<Site>& sites);

/// Nearest-neighbour link, stored with a < b.
struct Link {
  Site a, b;
  friend auto operator<=>(const Link&, const Link&) = default;
  friend bool operator==(const Link&, const Link&) = default;
  static Link make(Site x, Site y) { return x < y ? Link{x, y} : Link{y, x}; }
  Link operator+(const Site& s) const { return Link{a + s, b + s}; }
};

/// Axis-aligned box [lo, hi] of Z^d.
class Region {
 public:
  Region() = default;
  Region(int dim, Site lo, Site hi);

  /// Λ[x;r] = {y : ‖x−y‖ ≤ r}, i.e. the cube of integer half-width ⌊r⌋.
  static Region ball(int dim, Site center, double radius);
  /// Cube [-half_width, half_width]^d.
  static Region centered(int dim, int half_width);

  int dim() const { return dim_; }
  const Site& lo() const { return lo_; }
  const Site& hi() const { return hi_; }
  bool empty() const;
  std::size_t size() const;
  bool contains(const Site& s) const;
  bool contains(const Region& r) const;
  bool contains_all(const std::vector<Site>& sites) const;

  /// Dense index of a contained site (row-major over the used axes).
  std::size_t index(const Site& s) const;
  Site site_at(std::size_t idx) const;

  Region dilated(int r) const;
  /// Sup-norm distance from s (inside) to the nearest site outside the box.
  int distance_to_complement(const Site& s) const;
  /// Half of the smallest side length, rounded down.
  int half_width() const;

  std::vector<Site> sites() const;

  template <class F>
  void for_each(F&& f) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) f(site_at(i));
  }

  friend bool operator==(const Region&, const Region&) = default;
  std::string str() const;

 private:
  int dim_ = 1;
  Site lo_{}, hi_{};
};

}  // namespace clansim

template <>
struct std::hash<clansim::Site> {
  std::size_t operator()(const clansim::Site& s) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int v : s.c) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

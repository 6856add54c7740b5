#include "clansim/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace clansim {

std::string Site::str(int dim) const {
  std::ostringstream os;
  os << '(';
  for (int i = 0; i < dim; ++i) {
    if (i) os << ',';
    os << c[i];
  }
  os << ')';
  return os.str();
}

int sup_distance(const Site& a, const Site& b) {
  int d = 0;
  for (int i = 0; i < kMaxDim; ++i) d = std::max(d, std::abs(a.c[i] - b.c[i]));
  return d;
}

int set_distance(const std::vector<Site>& a, const std::vector<Site>& b) {
  int best = -1;
  for (const auto& x : a)
    for (const auto& y : b) {
      const int d = sup_distance(x, y);
      if (best < 0 || d < best) best = d;
    }
  return best < 0 ? 0 : best;
}

int diameter(const std::vector<Site>& sites) {
  if (sites.size() < 2) return 0;
  int d = 0;
  for (int i = 0; i < kMaxDim; ++i) {
    auto [mn, mx] = std::minmax_element(sites.begin(), sites.end(),
                                        [i](const Site& p, const Site& q) { return p.c[i] < q.c[i]; });
    d = std::max(d, mx->c[i] - mn->c[i]);
  }
  return d;
}

Region::Region(int dim, Site lo, Site hi) : dim_(dim), lo_(lo), hi_(hi) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("region dimension must be in [1," + std::to_string(kMaxDim) + "]");
  for (int i = dim; i < kMaxDim; ++i) {
    lo_.c[i] = 0;
    hi_.c[i] = 0;
  }
}

Region Region::ball(int dim, Site center, double radius) {
  const int r = static_cast<int>(std::floor(radius + 1e-9));
  Site lo = center, hi = center;
  for (int i = 0; i < dim; ++i) {
    lo.c[i] -= r;
    hi.c[i] += r;
  }
  return Region(dim, lo, hi);
}

Region Region::centered(int dim, int half_width) { return ball(dim, Site{}, half_width); }

bool Region::empty() const {
  for (int i = 0; i < dim_; ++i)
    if (hi_.c[i] < lo_.c[i]) return true;
  return false;
}

std::size_t Region::size() const {
  if (empty()) return 0;
  std::size_t n = 1;
  for (int i = 0; i < dim_; ++i) n *= static_cast<std::size_t>(hi_.c[i] - lo_.c[i] + 1);
  return n;
}

bool Region::contains(const Site& s) const {
  for (int i = 0; i < dim_; ++i)
    if (s.c[i] < lo_.c[i] || s.c[i] > hi_.c[i]) return false;
  for (int i = dim_; i < kMaxDim; ++i)
    if (s.c[i] != 0) return false;
  return true;
}

bool Region::contains(const Region& r) const {
  if (r.empty()) return true;
  return contains(r.lo_) && contains(r.hi_);
}

bool Region::contains_all(const std::vector<Site>& sites) const {
  return std::all_of(sites.begin(), sites.end(), [this](const Site& s) { return contains(s); });
}

std::size_t Region::index(const Site& s) const {
  std::size_t idx = 0;
  for (int i = 0; i < dim_; ++i) {
    idx = idx * static_cast<std::size_t>(hi_.c[i] - lo_.c[i] + 1) + static_cast<std::size_t>(s.c[i] - lo_.c[i]);
  }
  return idx;
}

Site Region::site_at(std::size_t idx) const {
  Site s;
  for (int i = dim_ - 1; i >= 0; --i) {
    const auto w = static_cast<std::size_t>(hi_.c[i] - lo_.c[i] + 1);
    s.c[i] = lo_.c[i] + static_cast<int>(idx % w);
    idx /= w;
  }
  return s;
}

Region Region::dilated(int r) const {
  Site lo = lo_, hi = hi_;
  for (int i = 0; i < dim_; ++i) {
    lo.c[i] -= r;
    hi.c[i] += r;
  }
  return Region(dim_, lo, hi);
}

int Region::distance_to_complement(const Site& s) const {
  int d = -1;
  for (int i = 0; i < dim_; ++i) {
    const int di = std::min(s.c[i] - lo_.c[i], hi_.c[i] - s.c[i]) + 1;
    d = d < 0 ? di : std::min(d, di);
  }
  return d;
}

int Region::half_width() const {
  int w = -1;
  for (int i = 0; i < dim_; ++i) {
    const int wi = (hi_.c[i] - lo_.c[i]) / 2;
    w = w < 0 ? wi : std::min(w, wi);
  }
  return std::max(w, 0);
}

std::vector<Site> Region::sites() const {
  std::vector<Site> out;
  out.reserve(size());
  for_each([&](const Site& s) { out.push_back(s); });
  return out;
}

std::string Region::str() const { return lo_.str(dim_) + ".." + hi_.str(dim_); }

}  // namespace clansim

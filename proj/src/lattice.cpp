#include "pca/lattice.hpp"

#include <algorithm>
#include <cstdlib>

#include "pca/error.hpp"

namespace pca {

Site operator+(const Site& a, const Site& b) {
  if (a.size() != b.size()) throw InvalidArgument("site dimension mismatch");
  Site out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Site operator-(const Site& a, const Site& b) {
  if (a.size() != b.size()) throw InvalidArgument("site dimension mismatch");
  Site out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Site origin(int dimension) { return Site(static_cast<std::size_t>(dimension), 0); }

int sup_norm(const Site& s) {
  int m = 0;
  for (int v : s) m = std::max(m, std::abs(v));
  return m;
}

std::string to_string(const Site& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

OffsetSet::OffsetSet(std::vector<Site> sites) : sites_(std::move(sites)) {
  std::sort(sites_.begin(), sites_.end());
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    if (sites_[i].empty()) throw InvalidArgument("offset with zero coordinates");
    if (sites_[i].size() != sites_.front().size())
      throw InvalidArgument("offset set mixes dimensions");
    if (i && sites_[i] == sites_[i - 1])
      throw InvalidArgument("offset set repeats " + to_string(sites_[i]));
  }
}

bool OffsetSet::contains(const Site& s) const {
  return std::binary_search(sites_.begin(), sites_.end(), s);
}

std::vector<Site> canonical_sites(std::vector<Site> sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

std::vector<Site> cube(int dimension, int radius) {
  std::vector<Site> out;
  Site s(static_cast<std::size_t>(dimension), -radius);
  while (true) {
    out.push_back(s);
    int i = dimension - 1;
    while (i >= 0 && s[i] == radius) s[i--] = -radius;
    if (i < 0) break;
    ++s[i];
  }
  return out;
}

}  // namespace pca

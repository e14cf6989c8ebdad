#pragma once

#include <compare>
#include <initializer_list>
#include <string>
#include <vector>

namespace pca {

/// A point of Z^d. std::vector's lexicographic ordering is the canonical site order.
using Site = std::vector<int>;

Site operator+(const Site& a, const Site& b);
Site operator-(const Site& a, const Site& b);
Site origin(int dimension);
int sup_norm(const Site& s);
std::string to_string(const Site& s);

/// Finite set of lattice offsets, kept sorted and duplicate-free.
class OffsetSet {
 public:
  OffsetSet() = default;
  /// Throws InvalidArgument on repeated offsets or mixed dimensions.
  explicit OffsetSet(std::vector<Site> sites);
  OffsetSet(std::initializer_list<Site> sites) : OffsetSet(std::vector<Site>(sites)) {}

  const std::vector<Site>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  bool contains(const Site& s) const;

  auto operator<=>(const OffsetSet&) const = default;
  bool operator==(const OffsetSet&) const = default;

 private:
  std::vector<Site> sites_;
};

/// Sorts and removes duplicates.
std::vector<Site> canonical_sites(std::vector<Site> sites);

/// The cube C_n = [-n, n]^d in canonical order.
std::vector<Site> cube(int dimension, int radius);

}  // namespace pca

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pca/exact.hpp"

namespace pca {

/// Which oscillation norm constrains the test functions: l1 gives
/// D_inf (sup over ||delta f||_1 <= 1), l2 gives D_2 (||delta f||_2 <= 1).
enum class OscNorm { l1, l2 };

struct DistanceReport {
  double value = 0;
  bool exact = false;  // false: value is only a certified lower bound
  std::optional<double> upper;  // certified upper bound when one is available
};

/// Volumes up to this many sites are solved exactly by default.
inline constexpr std::size_t kExactDistanceSites = 4;

/// Largest possible distance on `sites` sites: 1 for l1, sqrt(sites) for l2.
double distance_diameter(OscNorm norm, std::size_t sites);

/// Exact supremum over every function of the `sites` spins. mu and nu are
/// marginal tables of size 2^sites. D_inf is a single linear program; D_2
/// is the minimum-norm point of the dual transport set, found with
/// Wolfe's algorithm and reported with its certified bracket.
DistanceReport exact_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites,
                              OscNorm norm);

/// Best ratio |E_mu f - E_nu f| / ||delta f|| over a fixed dictionary:
/// spins, spin pairs, all +-1/2 tables on runs of up to 3 consecutive
/// sites, all-plus indicators on runs, and the magnetization.
double dictionary_lower_bound(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites,
                              OscNorm norm);

/// exact_distance up to `exact_limit` sites, dictionary_lower_bound beyond.
DistanceReport marginal_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites,
                                 OscNorm norm, std::size_t exact_limit = kExactDistanceSites);

DistanceReport dictionary_distance(const ExactDistribution& mu, const ExactDistribution& nu,
                                   const std::vector<Site>& volume, OscNorm norm,
                                   std::size_t exact_limit = kExactDistanceSites);

}  // namespace pca

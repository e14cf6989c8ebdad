#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pca/lattice.hpp"

namespace pca {

/// Conditional law of the next spin at the origin: probs[i] is the
/// probability of +1 given neighborhood assignment i, where bit j of i is
/// the spin of neighborhood[j] (bit set <=> +1).
struct ProbTable {
  int dimension = 1;
  std::vector<Site> neighborhood;
  std::vector<double> probs;
};

/// Translation-invariant binary PCA given by the multilinear coefficients
/// of its local bias, h_x(eta) = sum_A r_A prod_{y in A} eta_{x+y}. The
/// next spin at x is +1 with probability (1 + h_x(eta)) / 2.
class FourierRule {
 public:
  /// Coefficients below this magnitude are not stored.
  static constexpr double kDropTolerance = 1e-15;

  FourierRule() = default;
  /// Repeated offset sets are summed.
  FourierRule(int dimension, std::vector<std::pair<OffsetSet, double>> terms);

  int dimension() const { return dimension_; }
  const std::map<OffsetSet, double>& coeffs() const { return coeffs_; }
  double coeff(const OffsetSet& a) const;
  /// Union of all offset sets with a stored coefficient, canonical order.
  std::vector<Site> support() const;
  double sum_abs() const;

  bool operator==(const FourierRule&) const = default;

 private:
  int dimension_ = 1;
  std::map<OffsetSet, double> coeffs_;
};

/// Finite-support nonnegative kernel on Z^d. Zero values are never stored.
struct Kernel {
  int dimension = 1;
  std::map<Site, double> values;

  double at(const Site& s) const;
  double l1() const;
  double l2() const;
  std::size_t support_size() const { return values.size(); }
};

struct ValidationReport {
  double h_max = 0;      // max |h_0| (exact) or sum |r_A| (bound)
  double sum_abs_r = 0;
  double p_min = 0;      // (1 - h_max) / 2, clamped at 0
  bool admissible = false;
  bool exact = false;    // false when h_max is only the sum |r_A| bound
};

/// A rule's terms as bit masks over its ordered support. Evaluates h for a
/// packed neighborhood pattern (bit j <=> spin of neighborhood()[j] is +1).
class MaskedRule {
 public:
  static constexpr std::size_t kMaxSupport = 64;

  struct Term {
    std::uint64_t mask;
    double coeff;
  };

  explicit MaskedRule(const FourierRule& rule);

  const std::vector<Site>& neighborhood() const { return neighborhood_; }
  const std::vector<Term>& terms() const { return terms_; }

  double h(std::uint64_t pattern) const {
    double sum = 0;
    for (const auto& t : terms_) sum += (__builtin_popcountll(t.mask & ~pattern) & 1) ? -t.coeff : t.coeff;
    return sum;
  }

 private:
  std::vector<Site> neighborhood_;
  std::vector<Term> terms_;
};

FourierRule walsh_expand(const ProbTable& table);
/// Inverse of walsh_expand over the rule's support.
ProbTable tabulate(const FourierRule& rule);

/// Throws InvalidArgument when the assignment misses a support site.
double evaluate_h(const FourierRule& rule, const std::map<Site, int>& assignment);

inline constexpr int kDefaultExactThreshold = 24;
ValidationReport validate(const FourierRule& rule, int exact_threshold = kDefaultExactThreshold);

/// psi(x) = sum_{A containing x} |r_A|.
Kernel psi(const FourierRule& rule);
/// (sum_A |A| |r_A|)^2.
double kappa(const FourierRule& rule);

Kernel convolve(const Kernel& a, const Kernel& b, std::size_t support_cap);
inline constexpr std::size_t kDefaultKernelCap = std::size_t{1} << 22;
/// k-fold convolution power; k = 0 gives the unit mass at the origin.
Kernel kernel_power(const Kernel& k, int power, std::size_t support_cap = kDefaultKernelCap);
/// k-fold convolution power of psi, k >= 1.
Kernel psi_power(const FourierRule& rule, int k, std::size_t support_cap = kDefaultKernelCap);

/// max over stored A of max_{y in A} |y|_inf.
int propagation_speed(const FourierRule& rule);

/// -log p_min, or +infinity when p_min = 0. Refuses a bound-only report.
double finite_energy_rho(const ValidationReport& report);
double finite_energy_rho(const FourierRule& rule);

namespace models {
FourierRule stavskaya(double eps);
FourierRule toom_nec(double eps);
FourierRule noisy_majority3(double eps);
FourierRule independent_flip(double m, double rho);
FourierRule always_plus();
}  // namespace models

/// Built-in model by name: stavskaya, toom_nec, noisy_majority3,
/// independent_flip, always_plus.
FourierRule builtin(std::string_view name, std::span<const double> params);

}  // namespace pca

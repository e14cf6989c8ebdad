#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pca/lattice.hpp"
#include "pca/rule.hpp"

namespace pca {

inline constexpr std::size_t kDefaultSiteCap = 20;

/// A function of finitely many spins, stored as its full value table.
/// Bit j of a table index is the spin of sites()[j] (bit set <=> +1);
/// sites are kept in canonical order.
class LocalFunction {
 public:
  LocalFunction() = default;
  /// `sites` may come in any order; the table is re-indexed to canonical
  /// order. Throws on repeated sites, size mismatch, or sites beyond `cap`.
  LocalFunction(int dimension, std::vector<Site> sites, Eigen::VectorXd table,
                std::size_t cap = kDefaultSiteCap);

  static LocalFunction constant(int dimension, double value);
  /// prod_{x in sites} sigma_x
  static LocalFunction spin_product(int dimension, std::vector<Site> sites);
  /// sum_{x in sites} sigma_x
  static LocalFunction spin_sum(int dimension, std::vector<Site> sites);
  /// 1{sigma_x = spin for all x in sites}
  static LocalFunction indicator(int dimension, std::vector<Site> sites, int spin = +1);
  /// Tabulates fn(spins), spins listed in the order of `sites`.
  static LocalFunction tabulate(int dimension, std::vector<Site> sites,
                                const std::function<double(std::span<const int>)>& fn);

  int dimension() const { return dimension_; }
  const std::vector<Site>& sites() const { return sites_; }
  const Eigen::VectorXd& table() const { return table_; }
  double operator()(std::uint64_t assignment) const { return table_[static_cast<Eigen::Index>(assignment)]; }
  double min() const { return table_.minCoeff(); }
  double max() const { return table_.maxCoeff(); }

  /// Same function viewed on the larger canonical site list `sites`.
  LocalFunction extended_to(const std::vector<Site>& sites, std::size_t cap = kDefaultSiteCap) const;
  /// Shift by `offset`: (tau f)(sigma) = f(sigma shifted), sites move by +offset.
  LocalFunction translated(const Site& offset) const;

 private:
  int dimension_ = 1;
  std::vector<Site> sites_;
  Eigen::VectorXd table_ = Eigen::VectorXd::Zero(1);
};

/// alpha f + beta g on the union of their sites.
LocalFunction combine(double alpha, const LocalFunction& f, double beta, const LocalFunction& g,
                      std::size_t cap = kDefaultSiteCap);

/// delta_x f for every site of a function (zeros included).
struct OscillationVector {
  int dimension = 1;
  std::map<Site, double> values;

  double at(const Site& s) const;
  /// p = infinity gives the max.
  double norm(double p) const;
};

OscillationVector oscillation(const LocalFunction& f);
double delta_norm(const LocalFunction& f, double p);

/// Sites whose oscillation falls below this are pruned from P f.
inline constexpr double kPruneTolerance = 1e-14;

/// P f(eta) = E[f(sigma') | eta] under the product transition law.
/// The result's sites are pruned to those with nonzero oscillation.
LocalFunction apply_transfer(const LocalFunction& f, const FourierRule& rule,
                             std::size_t cap = kDefaultSiteCap, bool prune = true);

struct ContractionReport {
  std::vector<Site> sites;  // union of the supports of delta(Pf) and psi*delta f
  std::vector<double> lhs;  // delta_x(Pf)
  std::vector<double> rhs;  // (psi * delta f)_x
  double max_violation = 0;  // max_x lhs - rhs (<= 0 when the contraction holds)
  double lhs_l2_squared = 0;  // ||delta(Pf)||_2^2
  double kappa_bound = 0;     // kappa ||delta f||_2^2
  double l2_violation = 0;    // lhs_l2_squared - kappa_bound
};

ContractionReport check_contraction(const LocalFunction& f, const FourierRule& rule,
                                    std::size_t cap = kDefaultSiteCap);

/// Function of the spins on several time layers. The joint table indexes
/// layer 0 sites first (low bits), then layer 1, and so on.
struct SpaceTimeFunction {
  int dimension = 1;
  std::vector<std::vector<Site>> layers;
  Eigen::VectorXd table;

  std::size_t site_count() const;
};

struct SpaceTimeOscillation {
  std::vector<OscillationVector> layers;
  double total_l2_squared = 0;
};

SpaceTimeOscillation spacetime_oscillation(const SpaceTimeFunction& F, std::size_t cap = kDefaultSiteCap);

}  // namespace pca

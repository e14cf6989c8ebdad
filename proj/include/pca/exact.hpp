#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "pca/engine.hpp"
#include "pca/localfn.hpp"
#include "pca/rule.hpp"

namespace pca {

inline constexpr std::size_t kExactSiteCap = 22;

/// Probability vector over every configuration of a tiny torus; entry i
/// is the configuration whose bit j is the spin of site j.
struct ExactDistribution {
  Torus torus;
  Eigen::VectorXd probs;

  static ExactDistribution dirac(const Torus& torus, std::uint64_t config);
  static ExactDistribution uniform(const Torus& torus);
  /// i.i.d. spins with P(+1) = p.
  static ExactDistribution product(const Torus& torus, double p);
  static ExactDistribution from_initial(const InitialLaw& law, const Torus& torus);
};

/// mu P(sigma) = sum_eta mu(eta) prod_x (1 + sigma_x h_x(eta)) / 2. Cost
/// 4^M; the result does not depend on `threads`.
ExactDistribution exact_step(const ExactDistribution& dist, const CompiledRule& rule, unsigned threads = 1);
ExactDistribution exact_step(const ExactDistribution& dist, const FourierRule& rule, unsigned threads = 1);

struct StationaryResult {
  ExactDistribution dist;
  double residual = 0;  // ||mu P - mu||_1 at the returned mu
  int iterations = 0;
};

/// Power iteration from the uniform law until ||mu P - mu||_1 <= tol.
/// Throws NotConverged (carrying the residual) after max_iter steps.
StationaryResult exact_stationary(const FourierRule& rule, const Torus& torus, double tol = 1e-12,
                                  int max_iter = 10000, unsigned threads = 1);

/// f at anchor evaluated on every configuration of the torus.
Eigen::VectorXd observable_values(const LocalFunction& f, const Torus& torus, const Site& anchor);

double exact_mean(const ExactDistribution& dist, const Eigen::VectorXd& values);
/// log E exp(lambda (f - E f)), by log-sum-exp.
double exact_mgf(const ExactDistribution& dist, const Eigen::VectorXd& values, double lambda);
double exact_mgf(const ExactDistribution& dist, const LocalFunction& f, const Site& anchor, double lambda);
/// P(f - E f >= u).
double exact_tail(const ExactDistribution& dist, const Eigen::VectorXd& values, double u);
double exact_tail(const ExactDistribution& dist, const LocalFunction& f, const Site& anchor, double u);

/// Law of the spins on `sites` (taken in canonical order); bit j is the
/// spin of the j-th canonical site.
Eigen::VectorXd exact_marginal(const ExactDistribution& dist, const std::vector<Site>& sites);

struct EntropyReport {
  std::vector<Site> volume;
  double ent = 0;  // +infinity when mu is not absolutely continuous w.r.t. nu on the volume
  bool finite() const { return ent < std::numeric_limits<double>::infinity(); }
};

/// Ent_volume(mu | nu) = sum mu log(mu / nu) over marginal cylinders.
EntropyReport exact_relative_entropy(const ExactDistribution& mu, const ExactDistribution& nu,
                                     const std::vector<Site>& volume);
/// Same for two marginal tables of equal size.
double relative_entropy(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu);

}  // namespace pca

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pca/constants.hpp"
#include "pca/distance.hpp"
#include "pca/engine.hpp"
#include "pca/exact.hpp"
#include "pca/localfn.hpp"

namespace pca {

enum class SourceKind { exact, monte_carlo };

/// A measure to test: an exact distribution or i.i.d. sample configurations.
class MeasureSource {
 public:
  static MeasureSource exact(ExactDistribution dist);
  static MeasureSource samples(std::vector<TorusConfig> configs);

  SourceKind kind() const;
  const Torus& torus() const;
  std::size_t sample_count() const;  // 0 for exact sources

  /// Distinct values of f with their probabilities (exact) or empirical
  /// frequencies (samples), in increasing order of value.
  struct WeightedValues {
    std::vector<double> values;
    std::vector<double> weights;
  };
  WeightedValues weighted_values(const LocalFunction& f, const Site& anchor) const;
  /// f on every sample, in sample order; throws for exact sources.
  std::vector<double> sample_values(const LocalFunction& f, const Site& anchor) const;

 private:
  std::variant<ExactDistribution, std::vector<TorusConfig>> data_;
};

struct CorpusEntry {
  std::string name;
  LocalFunction f;
  Site anchor;
};

/// sigma_0, sigma_0 sigma_1, sigma_-1 sigma_0 sigma_1, and the all-plus
/// and all-minus indicators of {0}, {0,1}, {0,1,2} (one dimension).
std::vector<CorpusEntry> default_corpus();

/// lo, lo + step, ..., hi.
std::vector<double> grid(double lo, double hi, double step);

struct StatPolicy {
  int bootstrap = 200;
  double se_multiplier = 3.0;
  double exact_tolerance = 1e-9;
  double max_lambda_range = 20.0;  // Monte Carlo: skip lambda with |lambda| * range(f) above this
  std::size_t min_samples = 100;
  std::uint64_t seed = 0;  // bootstrap streams
  unsigned threads = 1;
};

struct GcbPoint {
  std::size_t f = 0;  // index into the corpus
  double lambda = 0;
  double observed = 0;  // log E exp(lambda (f - E f))
  double bound = 0;     // (C / 2) lambda^2 ||delta f||_2^2
  double slack = 0;     // bound - observed
  double se = 0;        // bootstrap standard error (0 for exact)
  bool evaluated = true;
  bool violation = false;
};

struct GcbCertificate {
  SourceKind source = SourceKind::exact;
  double C = 0;
  std::vector<double> lambdas;
  std::vector<std::string> corpus;
  std::vector<GcbPoint> points;
  double min_slack = 0;  // over evaluated points
  std::vector<GcbPoint> violations;

  bool passed() const { return violations.empty(); }
};

/// Checks log E exp(lambda (f - E f)) <= (C / 2) lambda^2 ||delta f||_2^2 at
/// every (f, lambda). A violation needs observed - bound > exact_tolerance
/// (exact) or > se_multiplier * SE (samples, plug-in centering).
GcbCertificate certify_gcb(const MeasureSource& source, double C, const std::vector<CorpusEntry>& corpus,
                           const std::vector<double>& lambdas, const StatPolicy& policy = {});

struct TailPoint {
  double u = 0;
  double observed = 0;  // P(f - E f >= u)
  double bound = 0;     // exp(-u^2 / (2 C ||delta f||_2^2))
  double se = 0;
  bool violation = false;
};

struct TailReport {
  SourceKind source = SourceKind::exact;
  double C = 0;
  std::string name;
  double delta_l2_squared = 0;
  std::vector<TailPoint> points;

  bool passed() const;
};

TailReport check_tail(const MeasureSource& source, double C, const CorpusEntry& f, const std::vector<double>& us,
                      const StatPolicy& policy = {});

enum class CheckStatus { pass, vacuous, fail, not_applicable };
const char* to_string(CheckStatus s);

struct RelaxationCheck {
  double distance = 0;  // lower bound (exact when `exact`)
  bool exact = false;
  double bound = 0;     // square root of the theoretical squared bound
  CheckStatus status = CheckStatus::not_applicable;
};

struct RelaxationStep {
  long k = 0;
  double mean_gap = 0;  // |E sigma_0 under nu P^k - E sigma_0 under mu|
  RelaxationCheck d_inf;  // D_inf on the cube vs 2 C rho |C_{n+ak}| ||psi_k||_2^2
  RelaxationCheck d_2;    // D_2 on the cube vs 2 C rho |C_{n+ak}| ||psi_k||_1^2
  RelaxationCheck dbar;   // D_inf on the cube vs 2 C rho ||psi_k||_1^2 (translation-invariant start)
  RelaxationBound bounds;
};

struct RelaxationOptions {
  double tolerance = 1e-9;
  double stationary_tol = 1e-14;
  int stationary_max_iter = 100000;
  /// 0: exact oracle. Otherwise marginals are estimated from this many
  /// engine replicas, with mu taken at time stationary_steps.
  std::uint32_t replicas = 0;
  long stationary_steps = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct RelaxationTrace {
  std::vector<Site> volume;  // the cube C_n
  double C = 0;
  double rho = 0;
  double kappa = 0;
  bool exact = true;
  std::vector<RelaxationStep> steps;

  bool passed() const;
};

/// Distances between nu P^k and the stationary law on the cube of radius
/// n, against the relaxation bounds, for k = 0..k_max. The bounds use the
/// torus-wrapped psi_k and cap |C_{n+ak}| at the torus volume.
RelaxationTrace relaxation_trace(const FourierRule& rule, const InitialLaw& initial, const Torus& torus, int n,
                                 long k_max, double C, double rho, const RelaxationOptions& options = {});

struct EntropyVolume {
  std::vector<Site> volume;
  double ent = 0;          // Ent_volume(nu | mu), may be +infinity
  double ent_density = 0;  // ent / |volume|
  double site_distance = 0;  // D_inf on the first site of the volume
  DistanceReport volume_distance;  // D_inf on the whole volume
  double required = 0;     // site_distance^2 / (2 C)
  bool flagged = false;    // required exceeds ent_density: evidence against GCB(C) for mu
};

struct EntropyDiagnostic {
  double C = 0;
  std::vector<EntropyVolume> volumes;

  bool any_flagged() const;
};

/// For translation-invariant mu satisfying GCB(C) on the torus and any
/// translation-invariant nu, Ent_volume(nu | mu) / |volume| >= D_inf(site)^2 / (2 C).
EntropyDiagnostic entropy_dbar_diagnostic(const ExactDistribution& mu, const ExactDistribution& nu, double C,
                                       const std::vector<std::vector<Site>>& volumes);

/// k folded onto the torus: values at sites that coincide after wrapping are summed.
Kernel wrap_kernel(const Kernel& k, const Torus& torus);

}  // namespace pca

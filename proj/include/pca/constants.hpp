#pragma once

#include <optional>

#include <Eigen/Core>

namespace pca {

/// GCB constant of any product measure on {-1,+1}^Z^d.
inline constexpr double kProductGcbConstant = 0.25;

/// |kappa - 1| below this is treated as kappa = 1.
inline constexpr double kUnitKappaTolerance = 1e-12;

/// One step of the constant recursion: c + C kappa.
double gcb_after_one(double c, double C, double kappa);
/// Closed form of n steps of gcb_after_one.
double gcb_after_n(double c, double C, double kappa, long n);
/// c / (1 - kappa); throws NotContractive for kappa >= 1.
double gcb_stationary(double c, double kappa);
/// ((max(sqrt c, sqrt C)) / (1 - sqrt kappa))^2; throws NotContractive for kappa >= 1.
double spacetime_constant(double c, double C, double kappa);

struct ConstantLedger {
  double c = kProductGcbConstant;
  double C0 = 0;
  double kappa = 0;
  std::optional<double> C_inf;    // present iff kappa < 1
  std::optional<double> C_prime;  // present iff kappa < 1

  double C_n(long n) const { return gcb_after_n(c, C0, kappa, n); }
};

ConstantLedger make_ledger(double c, double C0, double kappa);

/// Matrix bounding the space-time moment generating function over n+1
/// time layers. Row i < n carries sqrt(c) sqrt(kappa)^j at column n-i+j
/// (0 <= j <= i); row n carries sqrt(C) sqrt(kappa)^j at column j.
struct SpaceTimeMatrix {
  int n = 0;
  Eigen::MatrixXd A;
  double norm_inf = 0;
  double norm_1 = 0;
  double norm_2_exact = 0;
  double norm_2_bound = 0;  // sqrt(norm_inf * norm_1)
};

Eigen::MatrixXd spacetime_matrix_entries(int n, double c, double C, double kappa);
SpaceTimeMatrix spacetime_matrix(int n, double c, double C, double kappa);

/// Largest singular value, from the top eigenvalue of A^T A.
double spectral_norm(const Eigen::MatrixXd& A);

struct RelaxationInputs {
  double C = 0;        // GCB constant of the stationary measure
  double rho = 0;      // finite-energy constant
  double psi_k_l1 = 0;
  double psi_k_l2 = 0;
  long n = 0;          // observation cube radius
  long k = 0;          // time steps
  int a = 0;           // propagation speed
  int dimension = 1;
  std::optional<double> kappa;
  /// Caps |C_{n+ak}| (finite torus volume); unset means Z^d.
  std::optional<double> volume_cap;
};

struct RelaxationBound {
  RelaxationInputs inputs;
  double cube_volume = 0;     // |C_{n+ak}|
  double d_inf_sq_bound = 0;  // 2 C rho |C_{n+ak}| ||psi_k||_2^2
  double d_2_sq_bound = 0;    // 2 C rho |C_{n+ak}| ||psi_k||_1^2
  double dbar_sq_bound = 0;   // 2 C rho ||psi_k||_1^2
  std::optional<double> dbar_exp_bound;  // 2 C rho kappa^k, kappa < 1
};

/// Throws InvalidArgument for infinite rho (no finite energy).
RelaxationBound relaxation_bounds(const RelaxationInputs& in);

/// |C_m| = (2m+1)^d.
double cube_volume(int dimension, long radius);

}  // namespace pca

#include "pca/constants.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "pca/error.hpp"

namespace pca {

namespace {

void check_nonnegative(double v, const char* name) {
  if (!(v >= 0.0) || std::isnan(v)) throw InvalidArgument(std::string(name) + " must be nonnegative");
}

void check_contractive(double kappa) {
  if (!(kappa < 1.0)) throw NotContractive("kappa = " + std::to_string(kappa) + " is not below 1");
}

}  // namespace

double gcb_after_one(double c, double C, double kappa) {
  if (!(c > 0.0)) throw InvalidArgument("c must be positive");
  check_nonnegative(C, "C");
  check_nonnegative(kappa, "kappa");
  return c + C * kappa;
}

double gcb_after_n(double c, double C, double kappa, long n) {
  gcb_after_one(c, C, kappa);
  if (n < 0) throw InvalidArgument("n must be nonnegative");
  const double nd = static_cast<double>(n);
  if (std::abs(kappa - 1.0) < kUnitKappaTolerance) return c * nd + C;
  const double kn = std::pow(kappa, nd);
  if (std::isinf(kn)) {
    const double shift = c / (kappa - 1.0);
    const double half = std::floor(nd / 2.0);
    return (C + shift) * std::pow(kappa, half) * std::pow(kappa, nd - half) - shift;
  }
  return c * (1.0 - kn) / (1.0 - kappa) + C * kn;
}

double gcb_stationary(double c, double kappa) {
  gcb_after_one(c, 0.0, kappa);
  check_contractive(kappa);
  return c / (1.0 - kappa);
}

double spacetime_constant(double c, double C, double kappa) {
  gcb_after_one(c, C, kappa);
  check_contractive(kappa);
  const double top = std::max(std::sqrt(c), std::sqrt(C)) / (1.0 - std::sqrt(kappa));
  return top * top;
}

ConstantLedger make_ledger(double c, double C0, double kappa) {
  ConstantLedger l{c, C0, kappa, std::nullopt, std::nullopt};
  gcb_after_one(c, C0, kappa);
  if (kappa < 1.0) {
    l.C_inf = gcb_stationary(c, kappa);
    l.C_prime = spacetime_constant(c, C0, kappa);
  }
  return l;
}

Eigen::MatrixXd spacetime_matrix_entries(int n, double c, double C, double kappa) {
  if (n < 0) throw InvalidArgument("n must be nonnegative");
  gcb_after_one(c, C, kappa);
  const double sk = std::sqrt(kappa);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) A(i, n - i + j) = std::sqrt(c) * std::pow(sk, j);
  for (int j = 0; j <= n; ++j) A(n, j) = std::sqrt(C) * std::pow(sk, j);
  return A;
}

double spectral_norm(const Eigen::MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  const Eigen::MatrixXd G = A.transpose() * A;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NotConverged("eigensolver for the spectral norm did not converge", 0.0);
  return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

SpaceTimeMatrix spacetime_matrix(int n, double c, double C, double kappa) {
  SpaceTimeMatrix m;
  m.n = n;
  m.A = spacetime_matrix_entries(n, c, C, kappa);
  m.norm_inf = m.A.cwiseAbs().rowwise().sum().maxCoeff();
  m.norm_1 = m.A.cwiseAbs().colwise().sum().maxCoeff();
  m.norm_2_bound = std::sqrt(m.norm_inf * m.norm_1);
  m.norm_2_exact = spectral_norm(m.A);
  return m;
}

double cube_volume(int dimension, long radius) {
  return std::pow(2.0 * static_cast<double>(radius) + 1.0, dimension);
}

RelaxationBound relaxation_bounds(const RelaxationInputs& in) {
  if (!std::isfinite(in.rho))
    throw InvalidArgument("no finite-energy constant: the stationary measure gives some cylinder zero mass "
                          "(max |h| = 1), so the relaxation bounds do not apply");
  check_nonnegative(in.C, "C");
  check_nonnegative(in.rho, "rho");
  if (in.n < 0 || in.k < 0 || in.a < 0) throw InvalidArgument("n, k and a must be nonnegative");
  RelaxationBound b;
  b.inputs = in;
  b.cube_volume = cube_volume(in.dimension, in.n + static_cast<long>(in.a) * in.k);
  if (in.volume_cap) b.cube_volume = std::min(b.cube_volume, *in.volume_cap);
  const double base = 2.0 * in.C * in.rho;
  b.d_inf_sq_bound = base * b.cube_volume * in.psi_k_l2 * in.psi_k_l2;
  b.d_2_sq_bound = base * b.cube_volume * in.psi_k_l1 * in.psi_k_l1;
  b.dbar_sq_bound = base * in.psi_k_l1 * in.psi_k_l1;
  if (in.kappa && *in.kappa < 1.0) b.dbar_exp_bound = base * std::pow(*in.kappa, static_cast<double>(in.k));
  return b;
}

}  // namespace pca

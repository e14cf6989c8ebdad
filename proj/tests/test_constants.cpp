#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "pca/constants.hpp"
#include "pca/error.hpp"

using namespace pca;
using doctest::Approx;

TEST_SUITE("constants") {

TEST_CASE("one step") {
  CHECK(gcb_after_one(0.25, 7.0, 0.0) == Approx(0.25));
  CHECK(gcb_after_one(0.25, 0.25, 0.25) == Approx(5.0 / 16));
  CHECK(gcb_after_one(0.25, 0.0, 0.9) == Approx(0.25));
  CHECK_THROWS_AS(gcb_after_one(0.0, 1.0, 0.5), InvalidArgument);
  CHECK_THROWS_AS(gcb_after_one(0.25, -1.0, 0.5), InvalidArgument);
}

TEST_CASE("n steps") {
  CHECK(gcb_after_n(0.25, 1.0, 1.0, 8) == Approx(3.0));
  CHECK(gcb_after_n(0.25, 0.25, 0.25, 2) == Approx(21.0 / 64));
  CHECK(gcb_after_n(0.25, 2.0, 0.5, 2000) == Approx(0.5));
  CHECK(gcb_after_n(0.25, 2.0, 0.5, 0) == 2.0);
  for (double kappa : {0.0, 0.09, 0.5, 1.0, 1.2}) {
    double C = 0.7;
    for (long n = 1; n <= 200; ++n) {
      C = gcb_after_one(0.25, C, kappa);
      CHECK(gcb_after_n(0.25, 0.7, kappa, n) == Approx(C).epsilon(1e-12));
    }
  }
}

TEST_CASE("geometric approach to the stationary constant") {
  const double c = 0.25, C0 = 1.3, kappa = 0.4;
  const double Cinf = gcb_stationary(c, kappa);
  for (long n = 0; n < 30; ++n)
    CHECK(std::abs(gcb_after_n(c, C0, kappa, n) - Cinf) == Approx(std::pow(kappa, n) * std::abs(C0 - Cinf)));
}

TEST_CASE("expanding kappa near overflow") {
  double C = 0;
  for (long n = 1; n <= 1760; ++n) {
    C = gcb_after_one(0.25, C, 1.5);
    const double closed = gcb_after_n(0.25, 0.0, 1.5, n);
    CHECK(std::isinf(closed) == std::isinf(C));
    if (!std::isinf(C)) CHECK(closed == Approx(C).epsilon(1e-12));
  }
}

TEST_CASE("stationary") {
  CHECK(gcb_stationary(0.25, 0.0) == Approx(0.25));
  CHECK(gcb_stationary(0.25, 0.5) == Approx(0.5));
  CHECK(gcb_stationary(0.25, 0.16) == Approx(0.2976190476190476).epsilon(1e-15));
  CHECK_THROWS_AS(gcb_stationary(0.25, 1.0), NotContractive);
}

TEST_CASE("space-time constant") {
  CHECK(spacetime_constant(0.25, 0.25, 0.0) == Approx(0.25));
  CHECK(spacetime_constant(0.25, 1.0, 0.25) == Approx(4.0));
  CHECK(spacetime_constant(0.25, 0.25, 0.16) == Approx(0.25 / 0.36));
  CHECK_THROWS_AS(spacetime_constant(0.25, 0.25, 1.0), NotContractive);
}

TEST_CASE("ledger") {
  const auto l = make_ledger(0.25, 0.25, 0.16);
  REQUIRE(l.C_inf);
  CHECK(*l.C_inf == Approx(0.2976190476190476));
  CHECK(l.C_n(1) == Approx(0.25 + 0.25 * 0.16));
  const auto lost = make_ledger(0.25, 0.25, 1.5);
  CHECK_FALSE(lost.C_inf);
  CHECK_FALSE(lost.C_prime);
}

TEST_CASE("space-time matrix examples") {
  const auto zero = spacetime_matrix(0, 0.25, 0.49, 0.5);
  CHECK(zero.A.rows() == 1);
  CHECK(zero.A(0, 0) == Approx(0.7));
  CHECK(zero.norm_2_exact == Approx(0.7));
  CHECK(zero.norm_inf == Approx(0.7));
  CHECK(zero.norm_1 == Approx(0.7));

  const auto one = spacetime_matrix(1, 1, 1, 0);
  Eigen::Matrix2d expected;
  expected << 0, 1, 1, 0;
  CHECK(one.A.isApprox(expected));
  CHECK(one.norm_2_exact == Approx(1.0));
}

TEST_CASE("space-time matrix layout") {
  const double c = 0.3, C = 0.8, kappa = 0.36;
  const auto A = spacetime_matrix_entries(4, c, C, kappa);
  // row 2 carries sqrt(c), sqrt(c) 0.6, sqrt(c) 0.36 starting at column 2
  CHECK(A(2, 0) == 0.0);
  CHECK(A(2, 1) == 0.0);
  CHECK(A(2, 2) == Approx(std::sqrt(c)));
  CHECK(A(2, 3) == Approx(std::sqrt(c) * 0.6));
  CHECK(A(2, 4) == Approx(std::sqrt(c) * 0.36));
  CHECK(A(4, 0) == Approx(std::sqrt(C)));
  CHECK(A(4, 4) == Approx(std::sqrt(C) * 0.36 * 0.36));
}

TEST_CASE("space-time norm chain") {
  for (double kappa : {0.04, 0.25, 0.49, 0.81})
    for (int n : {0, 1, 2, 5, 20, 60}) {
      const auto m = spacetime_matrix(n, 0.25, 0.4, kappa);
      const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.A);
      CHECK(m.norm_2_exact == Approx(svd.singularValues()(0)).epsilon(1e-8));
      CHECK(m.norm_2_exact * m.norm_2_exact <= m.norm_inf * m.norm_1 + 1e-9);
      CHECK(m.norm_2_exact * m.norm_2_exact <= spacetime_constant(0.25, 0.4, kappa) + 1e-9);
    }
}

TEST_CASE("relaxation bounds") {
  RelaxationInputs in;
  in.C = 0.3;
  in.rho = 1.2;
  in.psi_k_l1 = 0;
  in.psi_k_l2 = 0;
  in.n = 2;
  in.k = 3;
  in.a = 1;
  auto zero = relaxation_bounds(in);
  CHECK(zero.d_inf_sq_bound == 0.0);
  CHECK(zero.d_2_sq_bound == 0.0);
  CHECK(zero.dbar_sq_bound == 0.0);
  CHECK(zero.cube_volume == 11.0);

  in.kappa = 0.09;
  in.rho = -std::log(0.45);
  auto exp_bound = relaxation_bounds(in);
  REQUIRE(exp_bound.dbar_exp_bound);
  CHECK(*exp_bound.dbar_exp_bound == Approx(2 * 0.3 * in.rho * std::pow(0.09, 3)));

  in.k = 0;
  in.psi_k_l1 = 1;
  in.psi_k_l2 = 1;
  auto start = relaxation_bounds(in);
  CHECK(start.dbar_sq_bound == Approx(2 * 0.3 * in.rho));
  CHECK(start.d_inf_sq_bound == Approx(2 * 0.3 * in.rho * 5));

  in.volume_cap = 3.0;
  CHECK(relaxation_bounds(in).cube_volume == 3.0);

  in.rho = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(relaxation_bounds(in), InvalidArgument);
}

}

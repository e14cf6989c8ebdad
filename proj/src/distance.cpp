#include "pca/distance.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "pca/detail/simplex.hpp"
#include "pca/error.hpp"

namespace pca {

namespace {

constexpr int kWolfeIterations = 1000;

Eigen::VectorXd centered_difference(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites) {
  if (sites > kExactSiteCap) throw ResourceError("distance volume too large");
  const auto n = Eigen::Index{1} << sites;
  if (mu.size() != n || nu.size() != n) throw InvalidArgument("marginal tables do not match the volume");
  Eigen::VectorXd d = mu - nu;
  d.array() -= d.mean();
  return d;
}

// Rows g_u - g_v <= t_x for both orientations of every x-edge, listed by
// direction; direction x owns rows [x * N, (x + 1) * N).
Eigen::MatrixXd edge_rows(std::size_t sites, Eigen::Index extra_cols) {
  const Eigen::Index N = Eigen::Index{1} << sites;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sites) * N, N + extra_cols);
  Eigen::Index row = 0;
  for (std::size_t x = 0; x < sites; ++x)
    for (Eigen::Index v = 0; v < N; ++v) {
      if (v >> x & 1) continue;
      const Eigen::Index u = v | (Eigen::Index{1} << x);
      A(row, u) = 1;
      A(row, v) = -1;
      A(row + 1, v) = 1;
      A(row + 1, u) = -1;
      row += 2;
    }
  return A;
}

double linf_distance(const Eigen::VectorXd& delta, std::size_t sites) {
  const Eigen::Index N = delta.size(), n = static_cast<Eigen::Index>(sites);
  const Eigen::MatrixXd edges = edge_rows(sites, n);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(edges.rows() + 1 + N, N + n);
  A.topRows(edges.rows()) = edges;
  for (Eigen::Index x = 0; x < n; ++x) A.block(x * N, N + x, N, 1).setConstant(-1);
  A.row(edges.rows()).tail(n).setOnes();
  A.bottomLeftCorner(N, N).setIdentity();
  Eigen::VectorXd b = Eigen::VectorXd::Ones(A.rows());
  b.head(edges.rows()).setZero();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(N + n);
  c.head(N) = delta;
  return std::max(0.0, detail::maximize(A, b, c).value);
}

struct Oracle {
  double value;
  Eigen::VectorXd m;
};

// max <delta, g> over |g_u - g_v| <= t_x, 0 <= g <= sum t, with the dual
// transport cost per direction.
Oracle l2_oracle(const Eigen::VectorXd& delta, std::size_t sites, const Eigen::MatrixXd& A,
                 const Eigen::VectorXd& t) {
  const Eigen::Index N = delta.size(), n = static_cast<Eigen::Index>(sites);
  Eigen::VectorXd b(A.rows());
  for (Eigen::Index x = 0; x < n; ++x) b.segment(x * N, N).setConstant(t[x]);
  b.tail(N).setConstant(t.sum());
  const auto sol = detail::maximize(A, b, delta);
  Eigen::VectorXd m(n);
  const double box = sol.dual.tail(N).sum();
  for (Eigen::Index x = 0; x < n; ++x) m[x] = sol.dual.segment(x * N, N).sum() + box;
  return {sol.value, m};
}

DistanceReport l2_distance(const Eigen::VectorXd& delta, std::size_t sites) {
  const Eigen::Index N = delta.size(), n = static_cast<Eigen::Index>(sites);
  const Eigen::MatrixXd edges = edge_rows(sites, 0);
  Eigen::MatrixXd A(edges.rows() + N, N);
  A.topRows(edges.rows()) = edges;
  A.bottomRows(N).setIdentity();

  Eigen::VectorXd t0 = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  auto first = l2_oracle(delta, sites, A, t0);
  double lower = std::max(0.0, first.value);
  double upper = first.m.norm();

  // Wolfe's minimum-norm point over the convex hull of oracle points.
  std::vector<Eigen::VectorXd> S{first.m};
  std::vector<double> lam{1.0};
  Eigen::VectorXd x = first.m;
  bool converged = false;
  for (int it = 0; it < kWolfeIterations; ++it) {
    const double nx = x.norm();
    upper = std::min(upper, nx);
    if (nx <= 1e-15) {
      lower = upper = 0;
      converged = true;
      break;
    }
    const auto o = l2_oracle(delta, sites, A, x / nx);
    lower = std::max(lower, o.value);
    if (upper - lower <= 1e-12 + 1e-10 * upper) {
      converged = true;
      break;
    }
    if (x.squaredNorm() - x.dot(o.m) <= 1e-15 * x.squaredNorm()) break;
    S.push_back(o.m);
    lam.push_back(0.0);

    for (;;) {
      const Eigen::Index k = static_cast<Eigen::Index>(S.size());
      Eigen::MatrixXd P(n, k);
      for (Eigen::Index j = 0; j < k; ++j) P.col(j) = S[static_cast<std::size_t>(j)];
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + 1, k + 1);
      K.topLeftCorner(k, k) = P.transpose() * P;
      K.block(0, k, k, 1).setOnes();
      K.block(k, 0, 1, k).setOnes();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs[k] = 1;
      const Eigen::VectorXd alpha = K.completeOrthogonalDecomposition().solve(rhs).head(k);

      if ((alpha.array() > 1e-12).all()) {
        lam.assign(alpha.data(), alpha.data() + k);
        x = P * alpha;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index j = 0; j < k; ++j) {
        const double l = lam[static_cast<std::size_t>(j)];
        if (alpha[j] <= 1e-12 && l - alpha[j] > 0) theta = std::min(theta, l / (l - alpha[j]));
      }
      for (Eigen::Index j = 0; j < k; ++j)
        lam[static_cast<std::size_t>(j)] = theta * alpha[j] + (1 - theta) * lam[static_cast<std::size_t>(j)];
      std::vector<Eigen::VectorXd> keptS;
      std::vector<double> keptL;
      for (std::size_t j = 0; j < S.size(); ++j)
        if (lam[j] > 1e-14) {
          keptS.push_back(S[j]);
          keptL.push_back(lam[j]);
        }
      double total = 0;
      for (double l : keptL) total += l;
      for (auto& l : keptL) l /= total;
      S = std::move(keptS);
      lam = std::move(keptL);
      x = Eigen::VectorXd::Zero(n);
      for (std::size_t j = 0; j < S.size(); ++j) x += lam[j] * S[j];
      if (S.size() == 1) break;
    }
  }
  return {lower, converged, upper};
}

double osc_norm(const std::vector<double>& osc, OscNorm norm) {
  double s = 0;
  for (double d : osc) s += norm == OscNorm::l1 ? d : d * d;
  return norm == OscNorm::l1 ? s : std::sqrt(s);
}

// Marginal of delta onto a list of bit positions.
Eigen::VectorXd project(const Eigen::VectorXd& delta, const std::vector<std::size_t>& bits) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index{1} << bits.size());
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < bits.size(); ++j) k |= (i >> bits[j] & 1) << j;
    out[k] += delta[i];
  }
  return out;
}

std::vector<double> table_oscillation(const Eigen::VectorXd& table, std::size_t w) {
  std::vector<double> osc(w, 0.0);
  for (std::size_t j = 0; j < w; ++j)
    for (Eigen::Index i = 0; i < table.size(); ++i)
      if (!(i >> j & 1)) osc[j] = std::max(osc[j], std::abs(table[i | (Eigen::Index{1} << j)] - table[i]));
  return osc;
}

}  // namespace

double distance_diameter(OscNorm norm, std::size_t sites) {
  return norm == OscNorm::l1 ? 1.0 : std::sqrt(static_cast<double>(sites));
}

DistanceReport exact_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites,
                              OscNorm norm) {
  const auto delta = centered_difference(mu, nu, sites);
  if (sites == 0) return {0.0, true, 0.0};
  if (sites > 8) throw ResourceError("exact distance is limited to 8 sites");
  if (norm == OscNorm::l1) {
    const double v = linf_distance(delta, sites);
    return {v, true, v};
  }
  return l2_distance(delta, sites);
}

double dictionary_lower_bound(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites,
                              OscNorm norm) {
  const auto delta = centered_difference(mu, nu, sites);
  double best = 0;
  auto consider = [&](const std::vector<std::size_t>& bits, const Eigen::VectorXd& table) {
    const double d = osc_norm(table_oscillation(table, bits.size()), norm);
    if (d > 0) best = std::max(best, std::abs(project(delta, bits).dot(table)) / d);
  };

  for (std::size_t i = 0; i < sites; ++i)
    consider({i}, Eigen::Vector2d(-1, 1));
  Eigen::Vector4d pair(1, -1, -1, 1);
  for (std::size_t i = 0; i < sites; ++i)
    for (std::size_t j = i + 1; j < sites; ++j) consider({i, j}, pair);

  for (std::size_t w = 1; w <= std::min<std::size_t>(3, sites); ++w)
    for (std::size_t s = 0; s + w <= sites; ++s) {
      std::vector<std::size_t> bits(w);
      for (std::size_t j = 0; j < w; ++j) bits[j] = s + j;
      const Eigen::Index entries = Eigen::Index{1} << w;
      Eigen::VectorXd table(entries);
      for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << entries); ++signs) {
        for (Eigen::Index e = 0; e < entries; ++e) table[e] = (signs >> e & 1) ? 0.5 : -0.5;
        consider(bits, table);
      }
    }

  for (std::size_t w = 1; w <= sites && w <= 12; ++w)
    for (std::size_t s = 0; s + w <= sites; ++s) {
      std::vector<std::size_t> bits(w);
      for (std::size_t j = 0; j < w; ++j) bits[j] = s + j;
      Eigen::VectorXd table = Eigen::VectorXd::Zero(Eigen::Index{1} << w);
      table[table.size() - 1] = 1;
      consider(bits, table);
    }

  if (sites <= 12) {
    std::vector<std::size_t> bits(sites);
    for (std::size_t j = 0; j < sites; ++j) bits[j] = j;
    Eigen::VectorXd table(Eigen::Index{1} << sites);
    for (Eigen::Index i = 0; i < table.size(); ++i)
      table[i] = 2.0 * __builtin_popcountll(static_cast<unsigned long long>(i)) - static_cast<double>(sites);
    consider(bits, table);
  }
  return best;
}

DistanceReport marginal_distance(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu, std::size_t sites,
                                 OscNorm norm, std::size_t exact_limit) {
  if (sites <= exact_limit) return exact_distance(mu, nu, sites, norm);
  return {dictionary_lower_bound(mu, nu, sites, norm), false, std::nullopt};
}

DistanceReport dictionary_distance(const ExactDistribution& mu, const ExactDistribution& nu,
                                   const std::vector<Site>& volume, OscNorm norm, std::size_t exact_limit) {
  if (!(mu.torus == nu.torus)) throw InvalidArgument("measures live on different tori");
  const auto canon = canonical_sites(volume);
  return marginal_distance(exact_marginal(mu, canon), exact_marginal(nu, canon), canon.size(), norm, exact_limit);
}

}  // namespace pca

#include "pca/exact.hpp"

#include <algorithm>
#include <cmath>

#include "pca/error.hpp"
#include "pca/parallel.hpp"

namespace pca {

namespace {

std::size_t checked_states(const Torus& torus) {
  if (torus.size() > kExactSiteCap)
    throw ResourceError("exact oracle needs at most " + std::to_string(kExactSiteCap) + " sites, torus has " +
                        std::to_string(torus.size()));
  return std::size_t{1} << torus.size();
}

// Fixed number of partial sums for exact_step, chosen from M alone.
std::size_t block_count(std::size_t states) {
  std::size_t b = 16;
  while (b > 1 && b * states > (std::size_t{1} << 24)) b /= 2;
  return std::min(b, states);
}

std::uint64_t gather(std::uint64_t config, const std::vector<std::size_t>& idx) {
  std::uint64_t a = 0;
  for (std::size_t j = 0; j < idx.size(); ++j) a |= (config >> idx[j] & 1) << j;
  return a;
}

}  // namespace

ExactDistribution ExactDistribution::dirac(const Torus& torus, std::uint64_t config) {
  const auto n = checked_states(torus);
  if (config >= n) throw InvalidArgument("configuration index outside the torus");
  ExactDistribution d{torus, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  d.probs[static_cast<Eigen::Index>(config)] = 1.0;
  return d;
}

ExactDistribution ExactDistribution::uniform(const Torus& torus) {
  const auto n = checked_states(torus);
  return {torus, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n))};
}

ExactDistribution ExactDistribution::product(const Torus& torus, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("product law needs p in [0,1]");
  const auto n = checked_states(torus);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  v[0] = 1.0;
  for (std::size_t x = 0; x < torus.size(); ++x) {
    const Eigen::Index half = Eigen::Index{1} << x;
    v.segment(half, half) = p * v.head(half);
    v.head(half) *= 1.0 - p;
  }
  return {torus, std::move(v)};
}

ExactDistribution ExactDistribution::from_initial(const InitialLaw& law, const Torus& torus) {
  switch (law.kind) {
    case InitialLaw::Kind::all_plus:
      return dirac(torus, checked_states(torus) - 1);
    case InitialLaw::Kind::all_minus:
      return dirac(torus, 0);
    case InitialLaw::Kind::product:
      return product(torus, law.p);
    case InitialLaw::Kind::explicit_config:
      if (!law.config || !(law.config->torus() == torus))
        throw InvalidArgument("explicit initial configuration does not match the torus");
      return dirac(torus, law.config->low_bits());
  }
  throw InvalidArgument("unknown initial law");
}

ExactDistribution exact_step(const ExactDistribution& dist, const CompiledRule& rule, unsigned threads) {
  if (!(dist.torus == rule.torus())) throw InvalidArgument("distribution and rule use different tori");
  const std::size_t M = dist.torus.size();
  const std::size_t n = checked_states(dist.torus);
  if (static_cast<std::size_t>(dist.probs.size()) != n) throw InvalidArgument("probability vector has the wrong size");

  const std::size_t blocks = block_count(n);
  const std::size_t per_block = n / blocks;
  std::vector<Eigen::VectorXd> partial(blocks);
  parallel_chunks(blocks, 1, threads, [&](std::size_t b0, std::size_t b1) {
    Eigen::VectorXd prod(static_cast<Eigen::Index>(n));
    for (std::size_t b = b0; b < b1; ++b) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
      for (std::size_t eta = b * per_block; eta < (b + 1) * per_block; ++eta) {
        const double w = dist.probs[static_cast<Eigen::Index>(eta)];
        if (w == 0.0) continue;
        const auto config = TorusConfig::from_bits(dist.torus, eta);
        prod[0] = w;
        for (std::size_t x = 0; x < M; ++x) {
          const double p = rule.prob_plus(config, x);
          const Eigen::Index half = Eigen::Index{1} << x;
          prod.segment(half, half) = p * prod.head(half);
          prod.head(half) *= 1.0 - p;
        }
        acc += prod;
      }
      partial[b] = std::move(acc);
    }
  });
  ExactDistribution out{dist.torus, std::move(partial[0])};
  for (std::size_t b = 1; b < blocks; ++b) out.probs += partial[b];
  return out;
}

ExactDistribution exact_step(const ExactDistribution& dist, const FourierRule& rule, unsigned threads) {
  return exact_step(dist, CompiledRule(rule, dist.torus), threads);
}

StationaryResult exact_stationary(const FourierRule& rule, const Torus& torus, double tol, int max_iter,
                                  unsigned threads) {
  const CompiledRule compiled(rule, torus);
  auto mu = ExactDistribution::uniform(torus);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    auto next = exact_step(mu, compiled, threads);
    residual = (next.probs - mu.probs).lpNorm<1>();
    if (residual <= tol) return {std::move(mu), residual, it};
    mu = std::move(next);
  }
  throw NotConverged("stationary iteration hit " + std::to_string(max_iter) + " steps", residual);
}

Eigen::VectorXd observable_values(const LocalFunction& f, const Torus& torus, const Site& anchor) {
  const auto n = checked_states(torus);
  const auto idx = placed_sites(torus, f.sites(), anchor);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f(gather(i, idx));
  return v;
}

double exact_mean(const ExactDistribution& dist, const Eigen::VectorXd& values) {
  if (values.size() != dist.probs.size()) throw InvalidArgument("observable table has the wrong size");
  return dist.probs.dot(values);
}

double exact_mgf(const ExactDistribution& dist, const Eigen::VectorXd& values, double lambda) {
  const double mean = exact_mean(dist, values);
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (dist.probs[i] > 0) top = std::max(top, lambda * (values[i] - mean));
  double s = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (dist.probs[i] > 0) s += dist.probs[i] * std::exp(lambda * (values[i] - mean) - top);
  return top + std::log(s);
}

double exact_mgf(const ExactDistribution& dist, const LocalFunction& f, const Site& anchor, double lambda) {
  return exact_mgf(dist, observable_values(f, dist.torus, anchor), lambda);
}

double exact_tail(const ExactDistribution& dist, const Eigen::VectorXd& values, double u) {
  const double mean = exact_mean(dist, values);
  double s = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values[i] - mean >= u - 1e-12) s += dist.probs[i];
  return s;
}

double exact_tail(const ExactDistribution& dist, const LocalFunction& f, const Site& anchor, double u) {
  return exact_tail(dist, observable_values(f, dist.torus, anchor), u);
}

Eigen::VectorXd exact_marginal(const ExactDistribution& dist, const std::vector<Site>& sites) {
  const auto canon = canonical_sites(sites);
  if (canon.size() > kExactSiteCap) throw ResourceError("marginal volume too large");
  const auto idx = placed_sites(dist.torus, canon, origin(dist.torus.dimension()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(Eigen::Index{1} << canon.size());
  for (Eigen::Index i = 0; i < dist.probs.size(); ++i)
    out[static_cast<Eigen::Index>(gather(static_cast<std::uint64_t>(i), idx))] += dist.probs[i];
  return out;
}

double relative_entropy(const Eigen::VectorXd& mu, const Eigen::VectorXd& nu) {
  if (mu.size() != nu.size()) throw InvalidArgument("marginal tables differ in size");
  double s = 0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (mu[i] <= 0) continue;
    if (nu[i] <= 0) return std::numeric_limits<double>::infinity();
    s += mu[i] * std::log(mu[i] / nu[i]);
  }
  return std::max(s, 0.0);
}

EntropyReport exact_relative_entropy(const ExactDistribution& mu, const ExactDistribution& nu,
                                     const std::vector<Site>& volume) {
  if (!(mu.torus == nu.torus)) throw InvalidArgument("measures live on different tori");
  return {canonical_sites(volume), relative_entropy(exact_marginal(mu, volume), exact_marginal(nu, volume))};
}

}  // namespace pca

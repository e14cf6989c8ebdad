#include "pca/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pca/error.hpp"
#include "pca/parallel.hpp"
#include "pca/random.hpp"

namespace pca {

namespace {

constexpr double kTailSlack = 1e-12;

using Weights = std::vector<double>;

double weighted_mean(const std::vector<double>& v, const Weights& w) {
  double m = 0;
  for (std::size_t i = 0; i < v.size(); ++i) m += w[i] * v[i];
  return m;
}

double log_mgf(const std::vector<double>& v, const Weights& w, double lambda) {
  const double m = weighted_mean(v, w);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (w[i] > 0) top = std::max(top, lambda * (v[i] - m));
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (w[i] > 0) s += w[i] * std::exp(lambda * (v[i] - m) - top);
  return top + std::log(s);
}

double tail_mass(const std::vector<double>& v, const Weights& w, double u) {
  const double m = weighted_mean(v, w);
  double s = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] - m >= u - kTailSlack) s += w[i];
  return s;
}

struct Compressed {
  std::vector<double> values;
  Weights weights;
  std::vector<std::uint32_t> ids;  // per sample, empty for exact sources
};

Compressed compress(const MeasureSource& source, const LocalFunction& f, const Site& anchor) {
  Compressed c;
  if (source.kind() == SourceKind::exact) {
    auto wv = source.weighted_values(f, anchor);
    c.values = std::move(wv.values);
    c.weights = std::move(wv.weights);
    return c;
  }
  const auto raw = source.sample_values(f, anchor);
  std::map<double, std::uint32_t> index;
  for (double v : raw) index.emplace(v, 0);
  for (auto& [v, id] : index) {
    id = static_cast<std::uint32_t>(c.values.size());
    c.values.push_back(v);
  }
  c.weights.assign(c.values.size(), 0.0);
  c.ids.reserve(raw.size());
  for (double v : raw) {
    const auto id = index[v];
    c.ids.push_back(id);
    c.weights[id] += 1.0;
  }
  for (auto& w : c.weights) w /= static_cast<double>(raw.size());
  return c;
}

// Resampled weight vectors; resample b of corpus entry `label` reads the
// bootstrap stream (replica b, step label).
std::vector<Weights> bootstrap_weights(const Compressed& c, const StatPolicy& policy, std::uint32_t label) {
  const std::size_t n = c.ids.size();
  std::vector<Weights> out(static_cast<std::size_t>(policy.bootstrap));
  parallel_chunks(out.size(), 8, policy.threads, [&](std::size_t b0, std::size_t b1) {
    for (std::size_t b = b0; b < b1; ++b) {
      Weights w(c.values.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = draw_unit(policy.seed, Stream::bootstrap, static_cast<std::uint32_t>(b), label,
                                   static_cast<std::uint32_t>(i));
        const auto j = std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
        w[c.ids[j]] += 1.0;
      }
      for (auto& x : w) x /= static_cast<double>(n);
      out[b] = std::move(w);
    }
  });
  return out;
}

template <class Stat>
double bootstrap_se(const std::vector<Weights>& boot, Stat&& stat) {
  if (boot.size() < 2) return 0.0;
  std::vector<double> s;
  s.reserve(boot.size());
  for (const auto& w : boot) s.push_back(stat(w));
  double mean = 0;
  for (double x : s) mean += x;
  mean /= static_cast<double>(s.size());
  double var = 0;
  for (double x : s) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(s.size() - 1));
}

void check_samples(const MeasureSource& source, const StatPolicy& policy) {
  if (source.kind() == SourceKind::monte_carlo && source.sample_count() < policy.min_samples)
    throw InvalidArgument("sample size " + std::to_string(source.sample_count()) + " is below the floor of " +
                          std::to_string(policy.min_samples));
}

double delta_l2_squared(const CorpusEntry& e) {
  const double d = delta_norm(e.f, 2.0);
  if (!(d > 0)) throw InvalidArgument("corpus function '" + e.name + "' has zero oscillation");
  return d * d;
}

CheckStatus judge(double distance, double bound, double diameter, double tolerance) {
  if (distance > bound + tolerance) return CheckStatus::fail;
  if (bound >= diameter) return CheckStatus::vacuous;
  return CheckStatus::pass;
}

double spin_mean(const Eigen::VectorXd& one_site) { return one_site[1] - one_site[0]; }

}  // namespace

MeasureSource MeasureSource::exact(ExactDistribution dist) {
  MeasureSource s;
  s.data_ = std::move(dist);
  return s;
}

MeasureSource MeasureSource::samples(std::vector<TorusConfig> configs) {
  if (configs.empty()) throw InvalidArgument("sample source needs at least one configuration");
  for (const auto& c : configs)
    if (!(c.torus() == configs.front().torus())) throw InvalidArgument("samples live on different tori");
  MeasureSource s;
  s.data_ = std::move(configs);
  return s;
}

SourceKind MeasureSource::kind() const {
  return std::holds_alternative<ExactDistribution>(data_) ? SourceKind::exact : SourceKind::monte_carlo;
}

const Torus& MeasureSource::torus() const {
  if (const auto* d = std::get_if<ExactDistribution>(&data_)) return d->torus;
  return std::get<std::vector<TorusConfig>>(data_).front().torus();
}

std::size_t MeasureSource::sample_count() const {
  if (const auto* s = std::get_if<std::vector<TorusConfig>>(&data_)) return s->size();
  return 0;
}

MeasureSource::WeightedValues MeasureSource::weighted_values(const LocalFunction& f, const Site& anchor) const {
  std::map<double, double> acc;
  if (const auto* d = std::get_if<ExactDistribution>(&data_)) {
    const auto v = observable_values(f, d->torus, anchor);
    for (Eigen::Index i = 0; i < v.size(); ++i)
      if (d->probs[i] != 0.0) acc[v[i]] += d->probs[i];
  } else {
    const auto raw = sample_values(f, anchor);
    for (double v : raw) acc[v] += 1.0 / static_cast<double>(raw.size());
  }
  WeightedValues out;
  for (const auto& [v, w] : acc) {
    out.values.push_back(v);
    out.weights.push_back(w);
  }
  return out;
}

std::vector<double> MeasureSource::sample_values(const LocalFunction& f, const Site& anchor) const {
  const auto* s = std::get_if<std::vector<TorusConfig>>(&data_);
  if (!s) throw InvalidArgument("exact sources have no samples");
  const auto idx = placed_sites(torus(), f.sites(), anchor);
  std::vector<double> out;
  out.reserve(s->size());
  for (const auto& c : *s) {
    std::uint64_t a = 0;
    for (std::size_t j = 0; j < idx.size(); ++j) a |= std::uint64_t{c.bit(idx[j])} << j;
    out.push_back(f(a));
  }
  return out;
}

std::vector<CorpusEntry> default_corpus() {
  const Site o{0};
  std::vector<CorpusEntry> c{
      {"s0", LocalFunction::spin_product(1, {{0}}), o},
      {"s0*s1", LocalFunction::spin_product(1, {{0}, {1}}), o},
      {"s-1*s0*s1", LocalFunction::spin_product(1, {{-1}, {0}, {1}}), o},
  };
  const std::vector<std::vector<Site>> windows{{{0}}, {{0}, {1}}, {{0}, {1}, {2}}};
  for (int spin : {1, -1})
    for (const auto& w : windows) {
      std::string name = spin == 1 ? "plus[0" : "minus[0";
      name += w.size() > 1 ? ".." + std::to_string(w.size() - 1) + "]" : "]";
      c.push_back({name, LocalFunction::indicator(1, w, spin), o});
    }
  return c;
}

std::vector<double> grid(double lo, double hi, double step) {
  if (!(step > 0) || hi < lo) throw InvalidArgument("grid needs lo <= hi and a positive step");
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> g;
  for (long i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

GcbCertificate certify_gcb(const MeasureSource& source, double C, const std::vector<CorpusEntry>& corpus,
                           const std::vector<double>& lambdas, const StatPolicy& policy) {
  if (!(C >= 0) || !std::isfinite(C)) throw InvalidArgument("GCB constant must be finite and nonnegative");
  if (corpus.empty()) throw InvalidArgument("empty function corpus");
  if (lambdas.empty() || std::none_of(lambdas.begin(), lambdas.end(), [](double l) { return l < 0; }))
    throw InvalidArgument("lambda grid must contain negative values");
  check_samples(source, policy);

  GcbCertificate cert;
  cert.source = source.kind();
  cert.C = C;
  cert.lambdas = lambdas;
  cert.min_slack = std::numeric_limits<double>::infinity();
  const bool exact = source.kind() == SourceKind::exact;
  for (std::size_t j = 0; j < corpus.size(); ++j) {
    const auto& e = corpus[j];
    cert.corpus.push_back(e.name);
    const double d2 = delta_l2_squared(e);
    const double range = e.f.max() - e.f.min();
    const auto comp = compress(source, e.f, e.anchor);
    const auto boot = exact ? std::vector<Weights>{} : bootstrap_weights(comp, policy, static_cast<std::uint32_t>(j));
    for (double lambda : lambdas) {
      GcbPoint p;
      p.f = j;
      p.lambda = lambda;
      p.bound = 0.5 * C * lambda * lambda * d2;
      p.evaluated = exact || std::abs(lambda) * range <= policy.max_lambda_range;
      if (p.evaluated) {
        p.observed = log_mgf(comp.values, comp.weights, lambda);
        p.slack = p.bound - p.observed;
        if (!exact)
          p.se = bootstrap_se(boot, [&](const Weights& w) { return log_mgf(comp.values, w, lambda); });
        const double excess = p.observed - p.bound;
        p.violation = exact ? excess > policy.exact_tolerance : excess > policy.se_multiplier * p.se;
        cert.min_slack = std::min(cert.min_slack, p.slack);
        if (p.violation) cert.violations.push_back(p);
      }
      cert.points.push_back(p);
    }
  }
  if (!std::isfinite(cert.min_slack)) cert.min_slack = 0;
  return cert;
}

bool TailReport::passed() const {
  return std::none_of(points.begin(), points.end(), [](const TailPoint& p) { return p.violation; });
}

TailReport check_tail(const MeasureSource& source, double C, const CorpusEntry& e, const std::vector<double>& us,
                      const StatPolicy& policy) {
  if (!(C >= 0) || !std::isfinite(C)) throw InvalidArgument("GCB constant must be finite and nonnegative");
  if (us.empty() || std::any_of(us.begin(), us.end(), [](double u) { return !(u > 0); }))
    throw InvalidArgument("tail thresholds must be positive");
  check_samples(source, policy);

  TailReport rep;
  rep.source = source.kind();
  rep.C = C;
  rep.name = e.name;
  rep.delta_l2_squared = delta_l2_squared(e);
  const bool exact = source.kind() == SourceKind::exact;
  const auto comp = compress(source, e.f, e.anchor);
  const auto boot = exact ? std::vector<Weights>{} : bootstrap_weights(comp, policy, 0xFFFFu);
  for (double u : us) {
    TailPoint p;
    p.u = u;
    p.observed = tail_mass(comp.values, comp.weights, u);
    p.bound = C > 0 ? std::exp(-u * u / (2.0 * C * rep.delta_l2_squared)) : 0.0;
    if (!exact) p.se = bootstrap_se(boot, [&](const Weights& w) { return tail_mass(comp.values, w, u); });
    const double excess = p.observed - p.bound;
    p.violation = exact ? excess > policy.exact_tolerance : excess > policy.se_multiplier * p.se;
    rep.points.push_back(p);
  }
  return rep;
}

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass:
      return "pass";
    case CheckStatus::vacuous:
      return "vacuous";
    case CheckStatus::fail:
      return "fail";
    case CheckStatus::not_applicable:
      return "not_applicable";
  }
  return "unknown";
}

bool RelaxationTrace::passed() const {
  for (const auto& s : steps)
    for (const auto* c : {&s.d_inf, &s.d_2, &s.dbar})
      if (c->status == CheckStatus::fail) return false;
  return true;
}

Kernel wrap_kernel(const Kernel& k, const Torus& torus) {
  if (k.dimension != torus.dimension()) throw InvalidArgument("kernel and torus dimensions differ");
  Kernel out{k.dimension, {}};
  for (const auto& [s, v] : k.values) out.values[torus.coords(torus.index(s))] += v;
  return out;
}

RelaxationTrace relaxation_trace(const FourierRule& rule, const InitialLaw& initial, const Torus& torus, int n,
                                 long k_max, double C, double rho, const RelaxationOptions& options) {
  if (!std::isfinite(rho)) throw InvalidArgument("relaxation bounds need finite energy; rho is infinite");
  if (!(C >= 0) || n < 0 || k_max < 0) throw InvalidArgument("relaxation trace needs C >= 0, n >= 0, k_max >= 0");
  const int d = torus.dimension();
  const Site o = origin(d);
  RelaxationTrace trace;
  trace.volume = cube(d, n);
  trace.C = C;
  trace.rho = rho;
  trace.kappa = kappa(rule);
  trace.exact = options.replicas == 0;
  placed_sites(torus, trace.volume, o);

  const std::size_t sites = trace.volume.size();
  const std::size_t cylinders = std::size_t{1} << sites;
  const CompiledRule compiled(rule, torus);
  const int a = propagation_speed(rule);
  const bool invariant_start = initial.kind != InitialLaw::Kind::explicit_config;
  const Kernel psi1 = psi(rule);

  // Marginal tables on the cube for nu P^k (k = 0..k_max) and the stationary
  // law, plus per-cylinder standard errors for sampled marginals.
  std::vector<Eigen::VectorXd> nu_marg;
  Eigen::VectorXd mu_marg;
  std::vector<double> nu_origin_mean;
  double mu_origin_mean = 0;
  std::vector<double> allowance(static_cast<std::size_t>(k_max + 1), 0.0);

  if (trace.exact) {
    const auto stat =
        exact_stationary(rule, torus, options.stationary_tol, options.stationary_max_iter, options.threads);
    mu_marg = exact_marginal(stat.dist, trace.volume);
    mu_origin_mean = spin_mean(exact_marginal(stat.dist, {o}));
    auto nu = ExactDistribution::from_initial(initial, torus);
    for (long k = 0; k <= k_max; ++k) {
      nu_marg.push_back(exact_marginal(nu, trace.volume));
      nu_origin_mean.push_back(spin_mean(exact_marginal(nu, {o})));
      if (k < k_max) nu = exact_step(nu, compiled, options.threads);
    }
  } else {
    if (sites > 20) throw ResourceError("cube too large for sampled marginals");
    const long horizon = std::max(k_max, options.stationary_steps);
    RunOptions ro{horizon, options.replicas, SeedSpec{options.seed, {}}, options.threads};
    const Ensemble ens(initial, rule, torus, ro);
    const auto idx = placed_sites(torus, trace.volume, o);
    const std::size_t stride = static_cast<std::size_t>(k_max + 2);
    std::vector<std::uint32_t> seen(static_cast<std::size_t>(options.replicas) * stride);
    parallel_chunks(options.replicas, 16, options.threads, [&](std::size_t r0, std::size_t r1) {
      for (std::size_t r = r0; r < r1; ++r) {
        auto traj = ens.trajectory(static_cast<std::uint32_t>(r));
        auto record = [&](std::size_t slot) {
          std::uint32_t c = 0;
          for (std::size_t j = 0; j < idx.size(); ++j) c |= std::uint32_t{traj.current().bit(idx[j])} << j;
          seen[r * stride + slot] = c;
        };
        for (;;) {
          const long t = traj.step_index();
          if (t <= k_max) record(static_cast<std::size_t>(t));
          if (t == options.stationary_steps) record(stride - 1);
          if (!traj.advance()) break;
        }
      }
    });
    const double R = static_cast<double>(options.replicas);
    auto table_at = [&](std::size_t slot) {
      Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cylinders));
      for (std::size_t r = 0; r < options.replicas; ++r) t[seen[r * stride + slot]] += 1.0 / R;
      return t;
    };
    auto se_sum = [&](const Eigen::VectorXd& t) {
      double s = 0;
      for (Eigen::Index i = 0; i < t.size(); ++i) s += std::sqrt(t[i] * (1 - t[i]) / R);
      return s;
    };
    const auto centre = static_cast<Eigen::Index>(std::find(trace.volume.begin(), trace.volume.end(), o) -
                                                  trace.volume.begin());
    auto origin_mean = [&](const Eigen::VectorXd& t) {
      double m = 0;
      for (Eigen::Index i = 0; i < t.size(); ++i) m += ((i >> centre & 1) ? 1.0 : -1.0) * t[i];
      return m;
    };
    mu_marg = table_at(stride - 1);
    mu_origin_mean = origin_mean(mu_marg);
    const double mu_se = se_sum(mu_marg);
    for (long k = 0; k <= k_max; ++k) {
      nu_marg.push_back(table_at(static_cast<std::size_t>(k)));
      nu_origin_mean.push_back(origin_mean(nu_marg.back()));
      allowance[static_cast<std::size_t>(k)] = 1.5 * (se_sum(nu_marg.back()) + mu_se);
    }
  }

  Kernel psik{d, {{o, 1.0}}};
  for (long k = 0; k <= k_max; ++k) {
    RelaxationStep st;
    st.k = k;
    st.mean_gap = std::abs(nu_origin_mean[static_cast<std::size_t>(k)] - mu_origin_mean);
    RelaxationInputs in;
    in.C = C;
    in.rho = rho;
    in.psi_k_l1 = psik.l1();
    in.psi_k_l2 = wrap_kernel(psik, torus).l2();
    in.n = n;
    in.k = k;
    in.a = a;
    in.dimension = d;
    in.kappa = trace.kappa;
    in.volume_cap = static_cast<double>(torus.size());
    st.bounds = relaxation_bounds(in);

    const auto& nm = nu_marg[static_cast<std::size_t>(k)];
    const double extra = allowance[static_cast<std::size_t>(k)];
    const auto dinf = marginal_distance(nm, mu_marg, sites, OscNorm::l1);
    const auto d2 = marginal_distance(nm, mu_marg, sites, OscNorm::l2);
    const double diam_inf = distance_diameter(OscNorm::l1, sites);
    const double diam_2 = distance_diameter(OscNorm::l2, sites);
    const bool exact_dist = trace.exact && dinf.exact;
    st.d_inf = {dinf.value, exact_dist, std::sqrt(st.bounds.d_inf_sq_bound), CheckStatus::pass};
    st.d_inf.status = judge(dinf.value, st.d_inf.bound, diam_inf, options.tolerance + diam_inf * extra);
    st.d_2 = {d2.value, trace.exact && d2.exact, std::sqrt(st.bounds.d_2_sq_bound), CheckStatus::pass};
    st.d_2.status = judge(d2.value, st.d_2.bound, diam_2, options.tolerance + diam_2 * extra);
    st.dbar = {dinf.value, exact_dist, std::sqrt(st.bounds.dbar_sq_bound), CheckStatus::not_applicable};
    if (invariant_start)
      st.dbar.status = judge(dinf.value, st.dbar.bound, diam_inf, options.tolerance + diam_inf * extra);
    trace.steps.push_back(std::move(st));
    if (k < k_max) psik = convolve(psik, psi1, kDefaultKernelCap);
  }
  return trace;
}

bool EntropyDiagnostic::any_flagged() const {
  return std::any_of(volumes.begin(), volumes.end(), [](const EntropyVolume& v) { return v.flagged; });
}

EntropyDiagnostic entropy_dbar_diagnostic(const ExactDistribution& mu, const ExactDistribution& nu, double C,
                                          const std::vector<std::vector<Site>>& volumes) {
  if (!(C > 0)) throw InvalidArgument("entropy diagnostic needs C > 0");
  if (!(mu.torus == nu.torus)) throw InvalidArgument("measures live on different tori");
  EntropyDiagnostic out;
  out.C = C;
  for (const auto& vol : volumes) {
    EntropyVolume ev;
    ev.volume = canonical_sites(vol);
    if (ev.volume.empty()) throw InvalidArgument("empty volume");
    const auto mm = exact_marginal(mu, ev.volume), nm = exact_marginal(nu, ev.volume);
    ev.ent = relative_entropy(nm, mm);
    ev.ent_density = ev.ent / static_cast<double>(ev.volume.size());
    const std::vector<Site> first{ev.volume.front()};
    ev.site_distance =
        exact_distance(exact_marginal(nu, first), exact_marginal(mu, first), 1, OscNorm::l1).value;
    ev.volume_distance = marginal_distance(nm, mm, ev.volume.size(), OscNorm::l1);
    ev.required = ev.site_distance * ev.site_distance / (2.0 * C);
    ev.flagged = std::isfinite(ev.ent) && ev.required > ev.ent_density + 1e-12;
    out.volumes.push_back(std::move(ev));
  }
  return out;
}

}  // namespace pca

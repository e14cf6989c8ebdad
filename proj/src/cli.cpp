#include "pca/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pca/constants.hpp"
#include "pca/engine.hpp"
#include "pca/error.hpp"
#include "pca/exact.hpp"
#include "pca/io.hpp"
#include "pca/parallel.hpp"
#include "pca/rule.hpp"
#include "pca/verify.hpp"

namespace pca::cli {

namespace {

using io::json;

struct Options {
  // shared
  std::string rule_file, builtin_spec, out_file, emit = "json";
  std::optional<unsigned> threads;
  std::uint64_t seed = 0;
  std::string torus = "10";
  std::string init;
  long steps = -1;
  std::vector<std::string> observables;
  // rule
  std::string table_file, builtin_name;
  std::vector<double> params;
  // constants
  double c = kProductGcbConstant;
  std::optional<double> C0, kappa, rho, C;
  long n = 50, k = -1;
  int radius = 1;
  // simulate
  std::uint32_t replicas = 1;
  // exact
  double tol = 1e-12;
  int max_iter = 10000;
  bool probs = false;
  std::string lambdas = "-4:4:0.25", us = "0.5:3:0.5";
  // verify
  std::string source = "exact";
  int bootstrap = 200;
  long k_max = 30;
  int max_volume = 8;
};

Torus parse_torus(const std::string& s) {
  std::vector<int> sides;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      sides.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw InvalidArgument("bad torus '" + s + "'; expected L1xL2x...");
    }
  }
  return Torus(sides);
}

InitialLaw parse_init(const std::string& s) {
  if (s == "all_plus") return InitialLaw::all_plus();
  if (s == "all_minus") return InitialLaw::all_minus();
  if (s.rfind("product:", 0) == 0) {
    try {
      return InitialLaw::product(std::stod(s.substr(8)));
    } catch (const std::logic_error&) {
    }
  }
  throw InvalidArgument("bad initial law '" + s + "'; expected all_plus, all_minus or product:p");
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  const char sep = s.find(':') != std::string::npos ? ':' : ',';
  while (std::getline(ss, part, sep)) parts.push_back(part);
  std::vector<double> v;
  try {
    for (const auto& p : parts) v.push_back(std::stod(p));
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad number list '" + s + "'");
  }
  if (sep == ':') {
    if (v.size() != 3) throw InvalidArgument("grid must read lo:hi:step");
    return grid(v[0], v[1], v[2]);
  }
  return v;
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string part;
  try {
    while (std::getline(ss, part, ',')) v.push_back(std::stod(part));
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad number list '" + s + "'");
  }
  return v;
}

class Context {
 public:
  Context(Options& o, const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
      : o_(o), out_(out), err_(err) {
    manifest_.argv = args;
  }

  Options& opts() { return o_; }
  std::ostream& err() { return err_; }
  io::RunManifest& manifest() { return manifest_; }
  unsigned threads() const { return resolve_threads(o_.threads); }

  FourierRule rule() {
    if (!o_.rule_file.empty() && !o_.builtin_spec.empty()) throw InvalidArgument("give either --rule or --builtin");
    if (!o_.rule_file.empty()) {
      manifest_.add_input(o_.rule_file);
      return io::rule_from_json(io::read_json_file(o_.rule_file));
    }
    if (!o_.builtin_spec.empty()) {
      const auto colon = o_.builtin_spec.find(':');
      const auto name = o_.builtin_spec.substr(0, colon);
      const auto params = colon == std::string::npos ? std::vector<double>{}
                                                      : parse_doubles(o_.builtin_spec.substr(colon + 1));
      return builtin(name, params);
    }
    throw InvalidArgument("a rule is required: --rule FILE or --builtin NAME[:p1,p2]");
  }

  CorpusEntry observable(const std::string& spec, int dimension) {
    const auto at = spec.find('@');
    const auto path = spec.substr(0, at);
    manifest_.add_input(path);
    auto f = io::localfn_from_json(io::read_json_file(path));
    if (f.dimension() != dimension) throw InvalidArgument("observable " + path + " has the wrong dimension");
    Site anchor = origin(dimension);
    if (at != std::string::npos) {
      anchor.clear();
      for (double v : parse_doubles(spec.substr(at + 1))) anchor.push_back(static_cast<int>(v));
      if (static_cast<int>(anchor.size()) != dimension) throw InvalidArgument("anchor has the wrong dimension");
    }
    return {spec, std::move(f), anchor};
  }

  std::vector<CorpusEntry> corpus(int dimension) {
    std::vector<CorpusEntry> c;
    for (const auto& s : o_.observables) c.push_back(observable(s, dimension));
    if (c.empty()) {
      if (dimension != 1) {
        c.push_back({"s0", LocalFunction::spin_product(dimension, {origin(dimension)}), origin(dimension)});
      } else {
        c = default_corpus();
      }
    }
    return c;
  }

  void emit_json(json body) {
    body["manifest"] = manifest_.to_json();
    write(body.dump(2) + "\n");
  }

  void emit_csv(const std::string& header, const std::vector<std::string>& rows) {
    std::string text = "# manifest: " + manifest_.to_json().dump() + "\n" + header + "\n";
    for (const auto& r : rows) text += r + "\n";
    write(text);
  }

 private:
  void write(const std::string& text) {
    if (o_.out_file.empty())
      out_ << text;
    else
      io::write_text_file(o_.out_file, text);
  }

  Options& o_;
  std::ostream& out_;
  std::ostream& err_;
  io::RunManifest manifest_;
};

std::string csv_join(std::initializer_list<std::string> cells) {
  std::string s;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) s += ',';
    s += c;
    first = false;
  }
  return s;
}


std::string num(double v) { return io::format_double(v); }

// Sites as "x:y" joined by ';'.
std::string sites_text(const std::vector<Site>& sites) {
  std::string out;
  for (const auto& x : sites) {
    if (!out.empty()) out += ';';
    for (std::size_t i = 0; i < x.size(); ++i) out += (i ? ":" : "") + std::to_string(x[i]);
  }
  return out;
}

void emit_rule(Context& cx, const FourierRule& rule, json body) {
  if (cx.opts().emit != "csv") {
    cx.emit_json(std::move(body));
    return;
  }
  std::vector<std::string> rows;
  for (const auto& [set, r] : rule.coeffs()) rows.push_back(csv_join({sites_text(set.sites()), num(r)}));
  cx.emit_csv("set,r", rows);
}

// ---- rule ----

int run_rule_expand(Context& cx) {
  auto& o = cx.opts();
  cx.manifest().add_input(o.table_file);
  const auto rule = walsh_expand(io::table_from_json(io::read_json_file(o.table_file)));
  emit_rule(cx, rule, io::to_json(rule));
  return kOk;
}

int run_rule_inspect(Context& cx) {
  const auto rule = cx.rule();
  const auto report = validate(rule);
  json body{{"rule", io::to_json(rule)},
            {"validation", io::to_json(report)},
            {"psi", io::to_json(psi(rule))},
            {"kappa", io::number(kappa(rule))},
            {"propagation_speed", propagation_speed(rule)}};
  body["rho"] = report.exact && report.admissible ? io::number(finite_energy_rho(report)) : json(nullptr);
  if (rule.support().size() <= static_cast<std::size_t>(kDefaultExactThreshold)) body["table"] = io::to_json(tabulate(rule));
  emit_rule(cx, rule, body);
  return report.admissible ? kOk : kInadmissible;
}

int run_rule_builtin(Context& cx) {
  const auto& o = cx.opts();
  const auto rule = builtin(o.builtin_name, o.params);
  emit_rule(cx, rule, io::to_json(rule));
  return kOk;
}

// ---- constants ----

int run_constants(Context& cx) {
  auto& o = cx.opts();
  std::optional<FourierRule> rule;
  if (!o.rule_file.empty() || !o.builtin_spec.empty()) rule = cx.rule();
  if (!o.kappa && !rule) throw InvalidArgument("constants needs --kappa or a rule");
  if (o.n < 0) throw InvalidArgument("--n must be nonnegative");
  const double kap = o.kappa ? *o.kappa : kappa(*rule);
  const auto ledger = make_ledger(o.c, o.C0.value_or(kProductGcbConstant), kap);
  json body{{"ledger", io::to_json(ledger, o.n)}};
  body["matrix"] = io::to_json(spacetime_matrix(static_cast<int>(std::min<long>(o.n, 2000)), ledger.c, ledger.C0, kap));
  if (rule && o.k >= 0) {
    const auto report = validate(*rule);
    const double rho = o.rho ? *o.rho : finite_energy_rho(report);
    const double C = o.C ? *o.C : ledger.C_inf.value_or(std::numeric_limits<double>::quiet_NaN());
    if (!std::isfinite(C)) throw InvalidArgument("give --C; the rule is not contractive");
    const auto psik = kernel_power(psi(*rule), static_cast<int>(o.k));
    RelaxationInputs in;
    in.C = C;
    in.rho = rho;
    in.psi_k_l1 = psik.l1();
    in.psi_k_l2 = psik.l2();
    in.n = o.radius;
    in.k = o.k;
    in.a = propagation_speed(*rule);
    in.dimension = rule->dimension();
    in.kappa = kap;
    body["relaxation"] = io::to_json(relaxation_bounds(in));
  }
  if (o.emit == "csv") {
    std::vector<std::string> rows;
    for (long n = 0; n <= o.n; ++n) rows.push_back(csv_join({std::to_string(n), num(gcb_after_n(ledger.c, ledger.C0, kap, n))}));
    cx.emit_csv("n,C_n", rows);
    return kOk;
  }
  cx.emit_json(body);
  return kOk;
}

// ---- simulate ----

int run_simulate(Context& cx) {
  auto& o = cx.opts();
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  if (o.steps < 0) throw InvalidArgument("--steps is required");
  cx.manifest().seed = o.seed;
  const auto corpus = [&] {
    std::vector<CorpusEntry> c;
    for (const auto& s : o.observables) c.push_back(cx.observable(s, torus.dimension()));
    if (c.empty()) c.push_back({"s0", LocalFunction::spin_product(torus.dimension(), {origin(torus.dimension())}),
                                origin(torus.dimension())});
    return c;
  }();
  std::vector<AnchoredObservable> obs;
  for (const auto& e : corpus) obs.push_back({e.f, e.anchor});
  const Ensemble ens(parse_init(o.init.empty() ? "product:0.5" : o.init), rule, torus,
                     RunOptions{o.steps, o.replicas, SeedSpec{o.seed, {}}, cx.threads()});
  const auto series = ens.observe(obs);

  if (o.emit == "trajectory" || o.emit == "csv") {
    std::vector<std::string> rows;
    for (std::uint32_t r = 0; r < series.replicas; ++r)
      for (long t = 0; t <= series.steps; ++t)
        for (std::size_t j = 0; j < corpus.size(); ++j)
          rows.push_back(csv_join({std::to_string(r), std::to_string(t), corpus[j].name, num(series.at(r, t, j))}));
    cx.emit_csv("replica,step,observable,value", rows);
    return kOk;
  }
  json steps = json::array();
  const double R = static_cast<double>(series.replicas);
  for (long t = 0; t <= series.steps; ++t) {
    json per = json::array();
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      double s = 0, s2 = 0;
      for (std::uint32_t r = 0; r < series.replicas; ++r) {
        const double v = series.at(r, t, j);
        s += v;
        s2 += v * v;
      }
      const double mean = s / R;
      const double var = R > 1 ? std::max(0.0, (s2 - R * mean * mean) / (R - 1)) : 0.0;
      per.push_back({{"observable", corpus[j].name},
                     {"mean", io::number(mean)},
                     {"sd", io::number(std::sqrt(var))},
                     {"se", io::number(std::sqrt(var / R))}});
    }
    steps.push_back({{"step", t}, {"observables", per}});
  }
  cx.emit_json({{"torus", torus.sides()}, {"replicas", o.replicas}, {"steps", steps}});
  return kOk;
}

// ---- measures shared by exact and verify ----

struct Measure {
  ExactDistribution dist;
  std::string description;
  bool stationary = false;
};

Measure exact_measure(Context& cx, const FourierRule& rule, const Torus& torus) {
  auto& o = cx.opts();
  if (o.init.empty()) {
    auto st = exact_stationary(rule, torus, o.tol, o.max_iter, cx.threads());
    return {std::move(st.dist), "stationary", true};
  }
  auto d = ExactDistribution::from_initial(parse_init(o.init), torus);
  const CompiledRule compiled(rule, torus);
  for (long k = 0; k < std::max(0L, o.steps); ++k) d = exact_step(d, compiled, cx.threads());
  return {std::move(d), o.init + " after " + std::to_string(std::max(0L, o.steps)) + " steps", false};
}

// Default GCB constant for the chosen measure.
double default_C(Context& cx, const FourierRule& rule) {
  auto& o = cx.opts();
  if (o.C) return *o.C;
  const double kap = kappa(rule);
  if (o.init.empty()) return gcb_stationary(o.c, kap);
  const auto law = parse_init(o.init);
  const double C0 = law.kind == InitialLaw::Kind::product ? o.c : 0.0;
  return gcb_after_n(o.c, C0, kap, std::max(0L, o.steps));
}

int run_exact_stationary(Context& cx) {
  auto& o = cx.opts();
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  const auto st = exact_stationary(rule, torus, o.tol, o.max_iter, cx.threads());
  const auto site = exact_marginal(st.dist, {origin(torus.dimension())});
  json body{{"torus", torus.sides()},
            {"residual", io::number(st.residual)},
            {"iterations", st.iterations},
            {"site_plus_probability", io::number(site[1])},
            {"note", "finite-torus stationary law"}};
  if (o.emit == "csv") {
    std::vector<std::string> rows;
    for (Eigen::Index i = 0; i < st.dist.probs.size(); ++i) rows.push_back(csv_join({std::to_string(i), num(st.dist.probs[i])}));
    cx.emit_csv("state,probability", rows);
    return kOk;
  }
  if (o.probs) {
    json p = json::array();
    for (Eigen::Index i = 0; i < st.dist.probs.size(); ++i) p.push_back(io::number(st.dist.probs[i]));
    body["probs"] = p;
  }
  cx.emit_json(body);
  return kOk;
}

int run_exact_mgf(Context& cx) {
  auto& o = cx.opts();
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  const auto m = exact_measure(cx, rule, torus);
  const auto corpus = cx.corpus(torus.dimension());
  const auto lambdas = parse_grid(o.lambdas);
  json fs = json::array();
  std::vector<std::string> rows;
  for (const auto& e : corpus) {
    const auto values = observable_values(e.f, torus, e.anchor);
    json pts = json::array();
    for (double l : lambdas) {
      const double v = exact_mgf(m.dist, values, l);
      pts.push_back({{"lambda", io::number(l)}, {"log_mgf", io::number(v)}});
      rows.push_back(csv_join({e.name, num(l), num(v)}));
    }
    fs.push_back({{"f", e.name},
                  {"mean", io::number(exact_mean(m.dist, values))},
                  {"delta_l2_squared", io::number(std::pow(delta_norm(e.f, 2.0), 2))},
                  {"points", pts}});
  }
  if (o.emit == "csv") {
    cx.emit_csv("f,lambda,log_mgf", rows);
  } else {
    cx.emit_json({{"measure", m.description}, {"torus", torus.sides()}, {"functions", fs}});
  }
  return kOk;
}

// ---- verify ----

MeasureSource verify_source(Context& cx, const FourierRule& rule, const Torus& torus, std::string& description) {
  auto& o = cx.opts();
  if (o.source == "exact") {
    auto m = exact_measure(cx, rule, torus);
    description = m.description;
    return MeasureSource::exact(std::move(m.dist));
  }
  if (o.source != "mc") throw InvalidArgument("--source must be exact or mc");
  const long steps = o.steps < 0 ? 200 : o.steps;
  const auto init = o.init.empty() ? std::string("product:0.5") : o.init;
  description = init + " after " + std::to_string(steps) + " steps, " + std::to_string(o.replicas) + " replicas";
  const Ensemble ens(parse_init(init), rule, torus, RunOptions{steps, o.replicas, SeedSpec{o.seed, {}}, cx.threads()});
  return MeasureSource::samples(ens.states());
}

StatPolicy policy(Context& cx) {
  StatPolicy p;
  p.bootstrap = cx.opts().bootstrap;
  p.seed = cx.opts().seed;
  p.threads = cx.threads();
  return p;
}

int run_verify_mgf(Context& cx) {
  auto& o = cx.opts();
  cx.manifest().seed = o.seed;
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  const double C = default_C(cx, rule);
  std::string desc;
  const auto src = verify_source(cx, rule, torus, desc);
  const auto cert = certify_gcb(src, C, cx.corpus(torus.dimension()), parse_grid(o.lambdas), policy(cx));
  if (o.emit == "csv") {
    std::vector<std::string> rows;
    for (const auto& p : cert.points)
      rows.push_back(csv_join({cert.corpus[p.f], num(p.lambda), num(p.observed), num(p.bound), num(p.slack),
                               num(p.se), p.evaluated ? "1" : "0", p.violation ? "1" : "0"}));
    cx.emit_csv("f,lambda,observed,bound,slack,se,evaluated,violation", rows);
  } else {
    cx.emit_json({{"measure", desc}, {"certificate", io::to_json(cert)}});
  }
  cx.err() << (cert.passed() ? "PASS" : "FAIL") << " gcb C=" << num(C) << "\n";
  return cert.passed() ? kOk : kVerificationFailed;
}

int run_verify_tail(Context& cx) {
  auto& o = cx.opts();
  cx.manifest().seed = o.seed;
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  const double C = default_C(cx, rule);
  std::string desc;
  const auto src = verify_source(cx, rule, torus, desc);
  const auto us = parse_grid(o.us);
  json reports = json::array();
  std::vector<std::string> rows;
  bool ok = true;
  for (const auto& e : cx.corpus(torus.dimension())) {
    const auto rep = check_tail(src, C, e, us, policy(cx));
    ok = ok && rep.passed();
    reports.push_back(io::to_json(rep));
    for (const auto& p : rep.points)
      rows.push_back(csv_join({rep.name, num(p.u), num(p.observed), num(p.bound), num(p.se), p.violation ? "1" : "0"}));
  }
  if (o.emit == "csv")
    cx.emit_csv("f,u,observed,bound,se,violation", rows);
  else
    cx.emit_json({{"measure", desc}, {"reports", reports}, {"verdict", ok ? "PASS" : "FAIL"}});
  cx.err() << (ok ? "PASS" : "FAIL") << " tail C=" << num(C) << "\n";
  return ok ? kOk : kVerificationFailed;
}

int run_verify_relax(Context& cx) {
  auto& o = cx.opts();
  cx.manifest().seed = o.seed;
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  const double rho = o.rho ? *o.rho : finite_energy_rho(rule);
  const double C = o.C ? *o.C : gcb_stationary(o.c, kappa(rule));
  RelaxationOptions ro;
  ro.replicas = o.source == "mc" ? o.replicas : 0;
  ro.seed = o.seed;
  ro.threads = cx.threads();
  const auto trace = relaxation_trace(rule, parse_init(o.init.empty() ? "all_minus" : o.init), torus, o.radius,
                                      o.k_max, C, rho, ro);
  if (o.emit == "csv") {
    std::vector<std::string> rows;
    for (const auto& s : trace.steps)
      rows.push_back(csv_join({std::to_string(s.k), num(s.mean_gap), num(s.d_inf.distance), num(s.d_inf.bound),
                               to_string(s.d_inf.status), num(s.d_2.distance), num(s.d_2.bound),
                               to_string(s.d_2.status), num(s.dbar.bound), to_string(s.dbar.status)}));
    cx.emit_csv("k,mean_gap,d_inf,d_inf_bound,d_inf_status,d_2,d_2_bound,d_2_status,dbar_bound,dbar_status", rows);
  } else {
    cx.emit_json({{"trace", io::to_json(trace)}});
  }
  cx.err() << (trace.passed() ? "PASS" : "FAIL") << " relaxation\n";
  return trace.passed() ? kOk : kVerificationFailed;
}

int run_verify_entropy(Context& cx) {
  auto& o = cx.opts();
  const auto rule = cx.rule();
  const Torus torus = parse_torus(o.torus);
  const double C = o.C ? *o.C : gcb_stationary(o.c, kappa(rule));
  const auto mu = exact_stationary(rule, torus, o.tol, o.max_iter, cx.threads());
  auto nu = ExactDistribution::from_initial(parse_init(o.init.empty() ? "all_plus" : o.init), torus);
  const CompiledRule compiled(rule, torus);
  for (long k = 0; k < std::max(0L, o.steps); ++k) nu = exact_step(nu, compiled, cx.threads());
  std::vector<std::vector<Site>> volumes;
  const int d = torus.dimension();
  if (d == 1) {
    for (int v = 1; v <= std::min<int>(o.max_volume, torus.sides()[0]); ++v) {
      std::vector<Site> w;
      for (int i = 0; i < v; ++i) w.push_back({i});
      volumes.push_back(w);
    }
  } else {
    const int side = *std::min_element(torus.sides().begin(), torus.sides().end());
    for (int r = 0; 2 * r + 1 <= side && static_cast<int>(cube(d, r).size()) <= o.max_volume; ++r)
      volumes.push_back(cube(d, r));
  }
  const auto diag = entropy_dbar_diagnostic(mu.dist, nu, C, volumes);
  if (o.emit == "csv") {
    std::vector<std::string> rows;
    for (const auto& v : diag.volumes)
      rows.push_back(csv_join({std::to_string(v.volume.size()), num(v.ent), num(v.ent_density), num(v.site_distance),
                               num(v.required), v.flagged ? "1" : "0"}));
    cx.emit_csv("volume_size,ent,ent_density,site_distance,required,flagged", rows);
  } else {
    cx.emit_json({{"diagnostic", io::to_json(diag)}});
  }
  cx.err() << (diag.any_flagged() ? "FAIL" : "PASS") << " entropy diagnostic C=" << num(C) << "\n";
  return diag.any_flagged() ? kVerificationFailed : kOk;
}

// ---- wiring ----

void add_rule_source(CLI::App* app, Options& o) {
  app->add_option("--rule", o.rule_file, "Rule file (JSON)");
  app->add_option("--builtin", o.builtin_spec, "Built-in rule NAME[:p1,p2]");
}

void add_output(CLI::App* app, Options& o) {
  app->add_option("--out", o.out_file, "Write the report to this file");
  app->add_option("--emit", o.emit, "Output format")->check(CLI::IsMember({"json", "csv", "stats", "trajectory"}));
}

void add_measure(CLI::App* app, Options& o) {
  app->add_option("--torus", o.torus, "Torus sides L1xL2x...");
  app->add_option("--init", o.init, "all_plus | all_minus | product:p (default: the stationary law)");
  app->add_option("--steps", o.steps, "Steps from the initial law");
  app->add_option("--tol", o.tol, "Stationary residual tolerance");
  app->add_option("--max-iter", o.max_iter, "Stationary iteration cap");
  app->add_option("--c", o.c, "Product-measure GCB constant");
  app->add_option("--C", o.C, "GCB constant to test");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Probabilistic cellular automata: Fourier rules, GCB constants, simulation and verification",
               "pca_gcb"};
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "Worker threads (default: PCA_GCB_THREADS, then hardware)");

  std::function<int(Context&)> handler;
  auto on = [&](CLI::App* sub, std::function<int(Context&)> h) {
    sub->callback([&handler, h] { handler = h; });
  };

  auto* rule = app.add_subcommand("rule", "Derive, inspect or list rules");
  rule->require_subcommand(1);
  auto* expand = rule->add_subcommand("expand", "Fourier coefficients of a probability table");
  expand->add_option("--table", o.table_file, "Probability table file (JSON)")->required();
  add_output(expand, o);
  on(expand, run_rule_expand);
  auto* inspect = rule->add_subcommand("inspect", "Validate a rule and report psi, kappa, range, rho");
  add_rule_source(inspect, o);
  add_output(inspect, o);
  on(inspect, run_rule_inspect);
  auto* bi = rule->add_subcommand("builtin", "Emit a built-in rule");
  bi->add_option("name", o.builtin_name, "stavskaya | toom_nec | noisy_majority3 | independent_flip | always_plus")
      ->required();
  bi->add_option("--param", o.params, "Model parameters");
  add_output(bi, o);
  on(bi, run_rule_builtin);

  auto* cons = app.add_subcommand("constants", "GCB constant ledger, space-time matrix norms, relaxation bounds");
  add_rule_source(cons, o);
  cons->add_option("--c", o.c, "Product-measure GCB constant");
  cons->add_option("--C0", o.C0, "Initial GCB constant (default c)");
  cons->add_option("--kappa", o.kappa, "Contraction coefficient (default: from the rule)");
  cons->add_option("--n", o.n, "Largest n in the C_n table and matrix size");
  cons->add_option("--k", o.k, "Relaxation time (needs a rule)");
  cons->add_option("--radius", o.radius, "Observation cube radius");
  cons->add_option("--rho", o.rho, "Finite-energy constant (default: from the rule)");
  cons->add_option("--C", o.C, "Stationary GCB constant (default C_inf)");
  add_output(cons, o);
  on(cons, run_constants);

  auto* sim = app.add_subcommand("simulate", "Run the synchronous dynamics on a torus");
  add_rule_source(sim, o);
  sim->add_option("--torus", o.torus, "Torus sides L1xL2x...");
  sim->add_option("--init", o.init, "all_plus | all_minus | product:p");
  sim->add_option("--steps", o.steps, "Number of steps")->required();
  sim->add_option("--replicas", o.replicas, "Independent replicas");
  sim->add_option("--seed", o.seed, "Master seed");
  sim->add_option("--observable", o.observables, "Local function FILE[@anchor]");
  add_output(sim, o);
  on(sim, run_simulate);

  auto* ex = app.add_subcommand("exact", "Exact oracles on tiny tori");
  ex->require_subcommand(1);
  auto* exs = ex->add_subcommand("stationary", "Stationary law by power iteration");
  add_rule_source(exs, o);
  exs->add_option("--torus", o.torus, "Torus sides");
  exs->add_option("--tol", o.tol, "Residual tolerance");
  exs->add_option("--max-iter", o.max_iter, "Iteration cap");
  exs->add_flag("--probs", o.probs, "Include the full probability vector");
  add_output(exs, o);
  on(exs, run_exact_stationary);
  auto* exm = ex->add_subcommand("mgf", "Exact log moment generating function");
  add_rule_source(exm, o);
  add_measure(exm, o);
  exm->add_option("--observable", o.observables, "Local function FILE[@anchor]");
  exm->add_option("--lambda", o.lambdas, "lo:hi:step or a comma list");
  add_output(exm, o);
  on(exm, run_exact_mgf);

  auto* ver = app.add_subcommand("verify", "Check the concentration and relaxation inequalities");
  ver->require_subcommand(1);
  auto verify_common = [&](CLI::App* s) {
    add_rule_source(s, o);
    add_measure(s, o);
    add_output(s, o);
    s->add_option("--seed", o.seed, "Master seed");
    s->add_option("--source", o.source, "exact | mc")->check(CLI::IsMember({"exact", "mc"}));
    s->add_option("--replicas", o.replicas, "Monte Carlo replicas");
  };
  auto* vm = ver->add_subcommand("mgf", "Certify the GCB moment generating function bound");
  verify_common(vm);
  vm->add_option("--observable", o.observables, "Local function FILE[@anchor]");
  vm->add_option("--lambda", o.lambdas, "lo:hi:step or a comma list");
  vm->add_option("--bootstrap", o.bootstrap, "Bootstrap resamples");
  on(vm, run_verify_mgf);
  auto* vt = ver->add_subcommand("tail", "Check the Gaussian tail bound");
  verify_common(vt);
  vt->add_option("--observable", o.observables, "Local function FILE[@anchor]");
  vt->add_option("--u", o.us, "Thresholds lo:hi:step or a comma list");
  vt->add_option("--bootstrap", o.bootstrap, "Bootstrap resamples");
  on(vt, run_verify_tail);
  auto* vr = ver->add_subcommand("relax", "Distance to stationarity against the relaxation bounds");
  verify_common(vr);
  vr->add_option("--radius", o.radius, "Observation cube radius");
  vr->add_option("--k-max", o.k_max, "Largest time");
  vr->add_option("--rho", o.rho, "Finite-energy constant (default: from the rule)");
  on(vr, run_verify_relax);
  auto* ve = ver->add_subcommand("entropy", "Entropy density against the one-site distance");
  verify_common(ve);
  ve->add_option("--max-volume", o.max_volume, "Largest volume size");
  on(ve, run_verify_entropy);

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run with --help for usage\n";
    return kUsage;
  }
  if (!handler) {
    err << app.help();
    return kUsage;
  }

  Context cx(o, args, out, err);
  std::string name;
  for (const auto* s = app.get_subcommands().front(); s; s = s->get_subcommands().empty() ? nullptr : s->get_subcommands().front())
    name += (name.empty() ? "" : " ") + s->get_name();
  cx.manifest().subcommand = name;
  try {
    return handler(cx);
  } catch (const Inadmissible& e) {
    err << "inadmissible: " << e.what() << "\n";
    return kInadmissible;
  } catch (const ResourceError& e) {
    err << "resource cap: " << e.what() << "\n";
    return kResourceCap;
  } catch (const NotConverged& e) {
    err << "not converged: " << e.what() << "\n";
    return kResourceCap;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NotContractive& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int dispatch(int argc, char** argv) {
  return dispatch(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace pca::cli

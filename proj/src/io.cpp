#include "pca/io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "pca/error.hpp"

namespace pca::io {

json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double to_double(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InvalidArgument("expected a number, got " + j.dump());
}

json to_json(const Site& s) { return json(s); }

Site site_from_json(const json& j, int dimension) {
  if (!j.is_array()) throw InvalidArgument("site must be an array of integers, got " + j.dump());
  Site s;
  for (const auto& c : j) {
    if (!c.is_number_integer()) throw InvalidArgument("site coordinate must be an integer, got " + c.dump());
    s.push_back(c.get<int>());
  }
  if (static_cast<int>(s.size()) != dimension)
    throw InvalidArgument("site " + j.dump() + " does not have dimension " + std::to_string(dimension));
  return s;
}

namespace {

int dimension_of(const json& j) {
  if (!j.is_object() || !j.contains("dimension") || !j["dimension"].is_number_integer())
    throw InvalidArgument("missing integer field 'dimension'");
  const int d = j["dimension"].get<int>();
  if (d < 1) throw InvalidArgument("dimension must be positive");
  return d;
}

const json& field(const json& j, const char* name) {
  if (!j.contains(name)) throw InvalidArgument(std::string("missing field '") + name + "'");
  return j[name];
}

std::vector<Site> sites_from_json(const json& j, int d) {
  if (!j.is_array()) throw InvalidArgument("site list must be an array");
  std::vector<Site> out;
  for (const auto& s : j) out.push_back(site_from_json(s, d));
  return out;
}

json sites_to_json(const std::vector<Site>& sites) {
  json a = json::array();
  for (const auto& s : sites) a.push_back(to_json(s));
  return a;
}

json vector_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

}  // namespace

json to_json(const FourierRule& rule) {
  json coeffs = json::array();
  for (const auto& [set, r] : rule.coeffs()) coeffs.push_back({{"A", sites_to_json(set.sites())}, {"r", r}});
  return {{"dimension", rule.dimension()}, {"coeffs", coeffs}};
}

FourierRule rule_from_json(const json& j) {
  const int d = dimension_of(j);
  const auto& coeffs = field(j, "coeffs");
  if (!coeffs.is_array()) throw InvalidArgument("'coeffs' must be an array");
  std::vector<std::pair<OffsetSet, double>> terms;
  for (const auto& c : coeffs) terms.emplace_back(OffsetSet(sites_from_json(field(c, "A"), d)), to_double(field(c, "r")));
  return FourierRule(d, std::move(terms));
}

json to_json(const ProbTable& t) {
  return {{"dimension", t.dimension}, {"neighborhood", sites_to_json(t.neighborhood)}, {"probs", vector_json(t.probs)}};
}

ProbTable table_from_json(const json& j) {
  ProbTable t;
  t.dimension = dimension_of(j);
  t.neighborhood = sites_from_json(field(j, "neighborhood"), t.dimension);
  for (const auto& p : field(j, "probs")) t.probs.push_back(to_double(p));
  return t;
}

json to_json(const LocalFunction& f) {
  json table = json::array();
  for (Eigen::Index i = 0; i < f.table().size(); ++i) table.push_back(number(f.table()[i]));
  return {{"dimension", f.dimension()}, {"sites", sites_to_json(f.sites())}, {"table", table}};
}

LocalFunction localfn_from_json(const json& j) {
  const int d = dimension_of(j);
  auto sites = sites_from_json(field(j, "sites"), d);
  const auto& tj = field(j, "table");
  Eigen::VectorXd table(static_cast<Eigen::Index>(tj.size()));
  for (std::size_t i = 0; i < tj.size(); ++i) table[static_cast<Eigen::Index>(i)] = to_double(tj[i]);
  return LocalFunction(d, std::move(sites), std::move(table));
}

json to_json(const ValidationReport& r) {
  return {{"h_max", number(r.h_max)},
          {"sum_abs_r", number(r.sum_abs_r)},
          {"p_min", number(r.p_min)},
          {"admissible", r.admissible},
          {"exact", r.exact}};
}

json to_json(const Kernel& k) {
  json values = json::array();
  for (const auto& [s, v] : k.values) values.push_back({{"x", to_json(s)}, {"value", number(v)}});
  return {{"dimension", k.dimension}, {"values", values}, {"l1", number(k.l1())}, {"l2", number(k.l2())}};
}

json to_json(const ConstantLedger& l, long n_max) {
  json table = json::array();
  for (long n = 0; n <= n_max; ++n) table.push_back({{"n", n}, {"C_n", number(l.C_n(n))}});
  json out{{"c", number(l.c)}, {"C0", number(l.C0)}, {"kappa", number(l.kappa)}, {"C_n", table}};
  out["C_inf"] = l.C_inf ? number(*l.C_inf) : json(nullptr);
  out["C_prime"] = l.C_prime ? number(*l.C_prime) : json(nullptr);
  return out;
}

json to_json(const SpaceTimeMatrix& m) {
  return {{"n", m.n},
          {"norm_inf", number(m.norm_inf)},
          {"norm_1", number(m.norm_1)},
          {"norm_2_exact", number(m.norm_2_exact)},
          {"norm_2_bound", number(m.norm_2_bound)}};
}

json to_json(const RelaxationBound& b) {
  json out{{"C", number(b.inputs.C)},
           {"rho", number(b.inputs.rho)},
           {"psi_k_l1", number(b.inputs.psi_k_l1)},
           {"psi_k_l2", number(b.inputs.psi_k_l2)},
           {"n", b.inputs.n},
           {"k", b.inputs.k},
           {"a", b.inputs.a},
           {"cube_volume", number(b.cube_volume)},
           {"d_inf_sq_bound", number(b.d_inf_sq_bound)},
           {"d_2_sq_bound", number(b.d_2_sq_bound)},
           {"dbar_sq_bound", number(b.dbar_sq_bound)}};
  out["dbar_exp_bound"] = b.dbar_exp_bound ? number(*b.dbar_exp_bound) : json(nullptr);
  return out;
}

json to_json(const DistanceReport& d) {
  json out{{"value", number(d.value)}, {"exact", d.exact}};
  out["upper"] = d.upper ? number(*d.upper) : json(nullptr);
  return out;
}

namespace {
const char* source_name(SourceKind k) { return k == SourceKind::exact ? "exact" : "monte_carlo"; }

json point_json(const GcbPoint& p, const std::vector<std::string>& names) {
  return {{"f", names.at(p.f)},       {"lambda", number(p.lambda)}, {"observed", number(p.observed)},
          {"bound", number(p.bound)}, {"slack", number(p.slack)},   {"se", number(p.se)},
          {"evaluated", p.evaluated}, {"violation", p.violation}};
}

json check_json(const RelaxationCheck& c) {
  return {{"distance", number(c.distance)},
          {"exact", c.exact},
          {"bound", number(c.bound)},
          {"status", to_string(c.status)}};
}
}  // namespace

json to_json(const GcbCertificate& c) {
  json points = json::array(), violations = json::array();
  for (const auto& p : c.points) points.push_back(point_json(p, c.corpus));
  for (const auto& p : c.violations) violations.push_back(point_json(p, c.corpus));
  return {{"source", source_name(c.source)}, {"C", number(c.C)},
          {"lambdas", vector_json(c.lambdas)}, {"corpus", c.corpus},
          {"min_slack", number(c.min_slack)},  {"verdict", c.passed() ? "PASS" : "FAIL"},
          {"violations", violations},          {"points", points}};
}

json to_json(const TailReport& t) {
  json points = json::array();
  for (const auto& p : t.points)
    points.push_back({{"u", number(p.u)},
                      {"observed", number(p.observed)},
                      {"bound", number(p.bound)},
                      {"se", number(p.se)},
                      {"violation", p.violation}});
  return {{"source", source_name(t.source)},
          {"C", number(t.C)},
          {"f", t.name},
          {"delta_l2_squared", number(t.delta_l2_squared)},
          {"verdict", t.passed() ? "PASS" : "FAIL"},
          {"points", points}};
}

json to_json(const RelaxationTrace& t) {
  json steps = json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"k", s.k},
                     {"mean_gap", number(s.mean_gap)},
                     {"d_inf", check_json(s.d_inf)},
                     {"d_2", check_json(s.d_2)},
                     {"dbar", check_json(s.dbar)},
                     {"bounds", to_json(s.bounds)}});
  return {{"volume", sites_to_json(t.volume)},
          {"C", number(t.C)},
          {"rho", number(t.rho)},
          {"kappa", number(t.kappa)},
          {"exact", t.exact},
          {"note", "finite-torus analogue of infinite-volume bounds"},
          {"verdict", t.passed() ? "PASS" : "FAIL"},
          {"steps", steps}};
}

json to_json(const EntropyDiagnostic& e) {
  json vols = json::array();
  for (const auto& v : e.volumes)
    vols.push_back({{"volume", sites_to_json(v.volume)},
                    {"size", v.volume.size()},
                    {"ent", number(v.ent)},
                    {"ent_density", number(v.ent_density)},
                    {"site_distance", number(v.site_distance)},
                    {"volume_distance", to_json(v.volume_distance)},
                    {"required", number(v.required)},
                    {"flagged", v.flagged}});
  return {{"C", number(e.C)},
          {"note", "finite-volume diagnostic; flagged volumes are evidence against GCB(C)"},
          {"any_flagged", e.any_flagged()},
          {"volumes", vols}};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed for " + path);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

json RunManifest::to_json() const {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(started);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return {{"subcommand", subcommand},
          {"argv", argv},
          {"seed", seed},
          {"version", version},
          {"inputs", input_digests},
          {"started", stamp},
          {"wall_seconds", std::chrono::duration<double>(now - started).count()}};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace pca::io

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pca/constants.hpp"
#include "pca/distance.hpp"
#include "pca/exact.hpp"
#include "pca/localfn.hpp"
#include "pca/rule.hpp"
#include "pca/verify.hpp"

namespace pca::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Finite doubles as numbers; infinities and NaN as the strings "inf",
/// "-inf", "nan".
json number(double v);
double to_double(const json& j);

json to_json(const Site& s);
Site site_from_json(const json& j, int dimension);

/// {"dimension": d, "coeffs": [{"A": [[...], ...], "r": r}, ...]}
json to_json(const FourierRule& rule);
FourierRule rule_from_json(const json& j);

/// {"dimension": d, "neighborhood": [[...], ...], "probs": [...]}
json to_json(const ProbTable& t);
ProbTable table_from_json(const json& j);

/// {"dimension": d, "sites": [[...], ...], "table": [...]}
json to_json(const LocalFunction& f);
LocalFunction localfn_from_json(const json& j);

json to_json(const ValidationReport& r);
json to_json(const Kernel& k);
json to_json(const ConstantLedger& l, long n_max);
json to_json(const SpaceTimeMatrix& m);
json to_json(const RelaxationBound& b);
json to_json(const DistanceReport& d);
json to_json(const GcbCertificate& c);
json to_json(const TailReport& t);
json to_json(const RelaxationTrace& t);
json to_json(const EntropyDiagnostic& e);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

/// Provenance block embedded in every output.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void add_input(const std::string& path) { input_digests[path] = sha256_file(path); }
  json to_json() const;
};

/// %.17g
std::string format_double(double v);

}  // namespace pca::io

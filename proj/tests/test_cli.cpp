#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pca/cli.hpp"
#include "pca/io.hpp"

using pca::io::json;
using doctest::Approx;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "pca_gcb");
  std::ostringstream out, err;
  const int code = pca::cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(PCA_TEST_DATA) + "/" + name; }

std::string temp(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("pca_cli_" + name)).string();
}

// Runs the installed binary and returns its exit status.
int shell(const std::string& args) {
  const int status = std::system((std::string(PCA_GCB_EXE) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("rule expand then inspect reproduces the table") {
  const auto expanded = run({"rule", "expand", "--table", data("stavskaya.json")});
  REQUIRE(expanded.code == 0);
  const auto j = json::parse(expanded.out);
  CHECK(j["coeffs"].size() == 4);
  CHECK(j.contains("manifest"));
  CHECK(j["manifest"]["inputs"].contains(data("stavskaya.json")));

  const auto path = temp("rule.json");
  {
    auto body = j;
    body.erase("manifest");
    std::ofstream(path) << body.dump();
  }
  const auto inspected = run({"rule", "inspect", "--rule", path});
  REQUIRE(inspected.code == 0);
  const auto ij = json::parse(inspected.out);
  const auto table = pca::io::table_from_json(ij["table"]);
  const std::vector<double> expected{0.3, 0.3, 0.3, 1.0};
  REQUIRE(table.probs.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(table.probs[i] - expected[i]) <= 1e-12);
  CHECK(ij["kappa"].get<double>() == Approx(4 * 0.7 * 0.7));
  std::remove(path.c_str());
}

TEST_CASE("constants ledger") {
  const auto r = run({"constants", "--c", "0.25", "--C0", "0.25", "--kappa", "0.16", "--n", "50"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["ledger"]["C_inf"].get<double>() == Approx(0.2976190476190476).epsilon(1e-15));
}

TEST_CASE("verify mgf on a Dirac input passes with zero slack") {
  const auto r = run({"verify", "mgf", "--builtin", "always_plus", "--torus", "6", "--init", "all_minus", "--steps",
                      "0", "--C", "0"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["certificate"]["verdict"] == "PASS");
  CHECK(j["certificate"]["min_slack"].get<double>() == 0.0);
}

TEST_CASE("csv outputs carry the manifest") {
  const auto r = run({"simulate", "--builtin", "noisy_majority3:0.2", "--torus", "12", "--steps", "2", "--replicas",
                      "2", "--emit", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("# manifest: {", 0) == 0);
  CHECK(r.out.find("replica,step,observable,value") != std::string::npos);
}

TEST_CASE("every table-shaped command honours --emit csv") {
  const std::vector<std::pair<std::vector<std::string>, std::string>> cases{
      {{"rule", "builtin", "toom_nec", "--param", "0.3"}, "set,r\n,0.29999999999999999\n"},
      {{"constants", "--kappa", "0.16", "--c", "0.25", "--n", "1"}, "n,C_n\n0,0.25\n1,0.28999999999999998\n"},
      {{"exact", "stationary", "--builtin", "always_plus", "--torus", "2"}, "state,probability\n0,0\n"},
      {{"verify", "tail", "--builtin", "noisy_majority3:0.45", "--torus", "6", "--u", "1"}, "f,u,observed,bound,se,violation\n"},
      {{"verify", "entropy", "--builtin", "noisy_majority3:0.45", "--torus", "6", "--max-volume", "2"},
       "volume_size,ent,ent_density,site_distance,required,flagged\n1,"}};
  for (auto [args, expected] : cases) {
    args.insert(args.end(), {"--emit", "csv"});
    const auto r = run(args);
    CAPTURE(args[0]);
    CHECK(r.code == 0);
    CHECK(r.out.rfind("# manifest: {", 0) == 0);
    CHECK(r.out.find(expected) != std::string::npos);
  }
}

TEST_CASE("output does not depend on threads") {
  auto strip = [](const std::string& s) {
    auto j = json::parse(s);
    j.erase("manifest");
    return j.dump();
  };
  const auto a = run({"--threads", "1", "simulate", "--builtin", "stavskaya:0.4", "--torus", "64", "--steps", "5",
                      "--replicas", "40", "--seed", "3"});
  const auto b = run({"--threads", "4", "simulate", "--builtin", "stavskaya:0.4", "--torus", "64", "--steps", "5",
                      "--replicas", "40", "--seed", "3"});
  REQUIRE(a.code == 0);
  CHECK(strip(a.out) == strip(b.out));
}

TEST_CASE("exit codes in process") {
  CHECK(run({"rule", "inspect", "--builtin", "noisy_majority3:0.3"}).code == pca::cli::kOk);
  CHECK(run({"rule", "inspect", "--rule", data("inadmissible.json")}).code == pca::cli::kInadmissible);
  CHECK(run({"verify", "mgf", "--builtin", "noisy_majority3:0.3", "--torus", "6", "--C", "0.01"}).code ==
        pca::cli::kVerificationFailed);
  CHECK(run({"exact", "stationary", "--builtin", "noisy_majority3:0.3", "--torus", "23"}).code ==
        pca::cli::kResourceCap);
  CHECK(run({"exact", "stationary", "--builtin", "noisy_majority3:0.01", "--torus", "6", "--tol", "1e-15",
             "--max-iter", "2"})
            .code == pca::cli::kResourceCap);
  CHECK(run({"simulate", "--builtin", "stavskaya:0.3"}).code == pca::cli::kUsage);
  CHECK(run({"frobnicate"}).code == pca::cli::kUsage);
  CHECK(run({"constants", "--kappa", "1.5", "--builtin", "stavskaya:0.1", "--k", "2"}).code == pca::cli::kUsage);
}

TEST_CASE("exit codes of the binary") {
  CHECK(shell("rule builtin stavskaya --param 0.3") == 0);
  CHECK(shell("rule inspect --rule " + data("inadmissible.json")) == 2);
  CHECK(shell("verify tail --builtin noisy_majority3:0.3 --torus 6 --C 0.001") == 3);
  CHECK(shell("exact stationary --builtin noisy_majority3:0.3 --torus 30") == 4);
  CHECK(shell("--bogus") == 64);
}

TEST_CASE("observable files and anchors") {
  const auto r = run({"exact", "mgf", "--builtin", "independent_flip:0,0", "--torus", "5", "--observable",
                      data("sum3.json") + "@2", "--lambda", "-1,1"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  const auto& pts = j["functions"][0]["points"];
  // fair spins: log E e^{lambda S} = 3 log cosh lambda
  CHECK(pts[1]["log_mgf"].get<double>() == Approx(3 * std::log(std::cosh(1.0))));
}

}

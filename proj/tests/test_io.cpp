#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "pca/error.hpp"
#include "pca/io.hpp"

using namespace pca;
using doctest::Approx;

TEST_SUITE("io") {

TEST_CASE("rule round trip is lossless") {
  for (const auto& rule : {models::stavskaya(0.1), models::toom_nec(1.0 / 3), models::noisy_majority3(0.45),
                           models::independent_flip(0.1, 0.5)}) {
    const auto text = io::to_json(rule).dump();
    CHECK(io::rule_from_json(io::json::parse(text)) == rule);
  }
}

TEST_CASE("table and function round trips") {
  const ProbTable t{1, {{0}, {1}}, {0.1, 1.0 / 3, 0.5, 1.0}};
  const auto back = io::table_from_json(io::json::parse(io::to_json(t).dump()));
  CHECK(back.neighborhood == t.neighborhood);
  CHECK(back.probs == t.probs);

  const auto f = LocalFunction::spin_sum(2, {{0, 0}, {1, 0}, {0, -1}});
  const auto g = io::localfn_from_json(io::json::parse(io::to_json(f).dump()));
  CHECK(g.sites() == f.sites());
  CHECK(g.table() == f.table());
}

TEST_CASE("non-finite numbers are strings") {
  CHECK(io::number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(io::number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(io::number(std::nan("")) == "nan");
  CHECK(std::isinf(io::to_double(io::json("inf"))));
  CHECK(io::to_double(io::json(0.1)) == 0.1);
  CHECK(io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("malformed documents") {
  CHECK_THROWS_AS(io::rule_from_json(io::json::parse(R"({"coeffs": []})")), InvalidArgument);
  CHECK_THROWS_AS(io::rule_from_json(io::json::parse(R"({"dimension": 1, "coeffs": [{"A": [[0, 1]], "r": 1}]})")),
                  InvalidArgument);
  CHECK_THROWS_AS(io::read_json_file("/nonexistent/file.json"), Error);
}

TEST_CASE("sha256 of a file") {
  const auto path = (std::filesystem::temp_directory_path() / "pca_io_digest.txt").string();
  io::write_text_file(path, "abc");
  CHECK(io::sha256_file(path) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::remove(path.c_str());
}

TEST_CASE("manifest") {
  io::RunManifest m;
  m.subcommand = "constants";
  m.argv = {"pca_gcb", "constants"};
  m.seed = 5;
  const auto j = m.to_json();
  CHECK(j["subcommand"] == "constants");
  CHECK(j["seed"] == 5);
  CHECK(j["version"] == io::kVersion);
  CHECK(j.contains("started"));
}

TEST_CASE("certificate serialisation") {
  const Torus t({4});
  const auto cert = certify_gcb(MeasureSource::exact(ExactDistribution::uniform(t)), 0.25, default_corpus(), {-1, 1});
  const auto j = io::to_json(cert);
  CHECK(j["verdict"] == "PASS");
  CHECK(j["points"].size() == cert.points.size());
}

}

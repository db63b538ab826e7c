#include <doctest.h>

#include <cmath>

#include "bandlab/config.hpp"
#include "bandlab/experiments.hpp"

using namespace bandlab;

TEST_CASE("config parsing") {
  const auto c = parse_config("que", "# comment\nW = 3 # trailing\nL = 5\nE = -0.25\nseed = 18446744073709551615\n"
                                     "blocks = [[0, 1], [4, 2]]\nexperiment = \"que\"\nout = \"res\"\n");
  CHECK(c.W == 3);
  CHECK(c.L == 5);
  CHECK(c.E == -0.25);
  CHECK(c.seed == 18446744073709551615ULL);
  REQUIRE(c.blocks.size() == 2);
  CHECK(c.blocks[1] == BlockIndex{4, 2});
  CHECK(c.out == "res");
  CHECK(parse_config("universality", "ou_times = [0, 0.5, 2]\n").ou_times == std::vector<double>{0.0, 0.5, 2.0});
  CHECK(parse_config("clt", "precision = \"f32\"\n").precision == Precision::f32);

  CHECK_THROWS_AS(parse_config("que", "bogus = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("deloc", "E = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("que", "W = 1\nW = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("que", "W = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("que", "W 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("que", "experiment = \"deloc\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("nope", ""), ConfigError);
  CHECK_THROWS_AS(parse_config("clt", "precision = \"f16\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("que", "blocks = [[0, 1, 2]]\n"), ConfigError);
  try {
    parse_config("que", "W = 2\n\nfoo = 3\n", "x.cfg");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x.cfg:3") != std::string::npos);
  }
}

TEST_CASE("admissibility") {
  auto c = parse_config("decay", "t = 0.5\n");
  CHECK_NOTHROW(check_admissible(c));
  CHECK_THROWS_AS(check_admissible(parse_config("decay", "t = 1.0\n")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("decay", "")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("decay", "t = 0.5\nL = 2\n")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("qdiff", "eta = 0\n")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("qdiff", "eta = 0.1\nE = 2\n")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("que", "blocks = [[4, 0]]\nL = 4\n")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("theta", "xi_re = 0.8\nxi_im = 0.6\n")), ConfigError);
  CHECK_THROWS_AS(check_admissible(parse_config("kloop", "t = 0.5\nsigma = \"+\"\n")), ConfigError);
}

TEST_CASE("decay envelope") {
  const BlockGeometry g(8, 8);
  // M_t = W^2 ell_t^2 eta_t = 64 * 2 * 0.5 at E = 0, t = 1/2; ell_t = sqrt 2.
  const double Mt = 64.0;
  CHECK(decay_envelope(0.5, 6, g, 0.0) == doctest::Approx(1 / (Mt * Mt) + std::pow(8.0, -6)).epsilon(1e-13));
  CHECK(decay_envelope(0.5, 6, g, std::sqrt(2.0)) == doctest::Approx(9.36182e-5).epsilon(1e-5));
  CHECK(decay_envelope(0.5, 6, g, 1e9) == doctest::Approx(std::pow(8.0, -6)).epsilon(1e-6));
  for (double l = 0; l < 20; l += 0.5)
    CHECK(decay_envelope(0.5, 6, g, l + 0.5) <= decay_envelope(0.5, 6, g, l));
}

TEST_CASE("report files") {
  CsvTable t{"x.csv", {"a", "b", "c"}, {{std::int64_t{-3}, 0.1, std::string("p,q")}, {std::int64_t{0}, 1e-300, std::string("r")}}};
  CHECK(csv_text(t) == "a,b,c\n-3,0.1,\"p,q\"\n0,1e-300,r\n");

  auto empty = parse_config("deloc", "W = 2\nL = 3\n");
  const auto r = run_experiment(empty);
  CHECK(r.empty());
  CHECK(exit_code(r) == 3);
  CHECK(r.table("deloc.csv").rows.empty());
  CHECK(report_json(r).find("\"empty\": true") != std::string::npos);
}

TEST_CASE("qdiff table shapes and determinism") {
  auto c = parse_config("qdiff", "W = 2\nL = 3\nE = 0\neta = 0.3\nn_samples = 3\nseed = 5\n");
  const auto full = run_experiment(c);
  CHECK(full.table("qdiff_pm.csv").rows.size() == 81);
  CHECK(full.table("qdiff_pp.csv").rows.size() == 81);
  c.reduce = true;
  c.workers = 2;
  const auto red = run_experiment(c);
  CHECK(red.table("qdiff_pm.csv").rows.size() == 9);
  c.reduce = false;
  const auto again = run_experiment(c);
  CHECK(report_json(full) == report_json(again));
  CHECK(csv_text(full.table("qdiff_pm.csv")) == csv_text(again.table("qdiff_pm.csv")));
}

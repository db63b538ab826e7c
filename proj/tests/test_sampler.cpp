#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bandlab/sampler.hpp"
#include "bandlab/spectra.hpp"

using namespace bandlab;

TEST_CASE("band sample is deterministic, Hermitian and banded") {
  const VarianceProfile S(BlockGeometry(2, 5));
  const auto a = sample_band(S, {42, 7});
  const auto b = sample_band(S, {42, 7});
  const auto c = sample_band(S, {42, 8});
  CHECK(a.H == b.H);
  CHECK(a.H != c.H);
  const auto N = static_cast<Eigen::Index>(a.N());
  for (Eigen::Index x = 0; x < N; ++x) {
    CHECK(a.H(x, x).imag() == 0.0);
    for (Eigen::Index y = 0; y < N; ++y) {
      CHECK(a.H(y, x) == std::conj(a.H(x, y)));
      if (S.entry_flat(x, y) == 0.0) CHECK(a.H(x, y) == cplx(0.0));
    }
  }
}

TEST_CASE("band sample variances") {
  const BlockGeometry g(2, 3);
  const VarianceProfile S(g);
  const int n = 10000;
  const std::pair<int, int> probes[] = {{0, 0}, {0, 1}, {0, 6}, {3, 30}, {5, 5}};
  for (const auto& [x, y] : probes) {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = std::norm(sample_band(S, {11, static_cast<std::uint64_t>(i)}).H(x, y));
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    CHECK(std::abs(mean - S.entry_flat(x, y)) <= 5.0 * se + 1e-15);
  }
}

TEST_CASE("GUE normalisation and edge") {
  CHECK_THROWS_AS(sample_gue(1, {0, 0}), std::invalid_argument);
  const std::size_t N = 200;
  double frob = 0.0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const auto h = sample_gue(N, {3, static_cast<std::uint64_t>(i)});
    CHECK(h.H == h.H.adjoint());
    frob += h.H.squaredNorm();
  }
  CHECK(frob / n == doctest::Approx(static_cast<double>(N)).epsilon(0.01));
}

TEST_CASE("OU interpolation") {
  const VarianceProfile S(BlockGeometry(2, 4));
  const auto h0 = sample_band(S, {5, 1});
  const auto same = ou_interpolate(h0, 0.0, {5, 1});
  CHECK(same.H == h0.H);
  CHECK_THROWS_AS(ou_interpolate(h0, -1.0, {5, 1}), std::invalid_argument);

  const double t = 0.5;
  const std::size_t N = h0.N();
  const int n = 4000;
  const std::pair<int, int> probes[] = {{0, 1}, {0, 40}};
  for (const auto& [x, y] : probes) {
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const SeedSpec s{9, static_cast<std::uint64_t>(i)};
      const double v = std::norm(ou_interpolate(sample_band(S, s), t, s).H(x, y));
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
    const double expect = std::exp(-t) * S.entry_flat(x, y) + (1.0 - std::exp(-t)) / N;
    CHECK(std::abs(mean - expect) <= 5.0 * se);
  }
}

TEST_CASE("sample dump round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "bandlab_dump_test";
  std::filesystem::create_directories(dir);
  const auto h = sample_band(VarianceProfile(BlockGeometry(2, 3)), {123, 4});
  write_sample(h, dir / "s.bin");
  const auto r = read_sample(dir / "s.bin");
  CHECK(r.H == h.H);
  CHECK(r.seed == h.seed);
  REQUIRE(r.geom.has_value());
  CHECK(r.geom->W() == 2);
  CHECK(std::filesystem::file_size(dir / "s.bin") == 8 + 5 * 8 + 36 * 37 / 2 * 16);
  std::filesystem::remove_all(dir);
}

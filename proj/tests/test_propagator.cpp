#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bandlab/model.hpp"
#include "bandlab/propagator.hpp"

using namespace bandlab;

namespace {

// Dense (1 - xi S^(B))^-1 built entry by entry from the stencil definition.
Eigen::MatrixXcd dense_theta(cplx xi, int L) {
  const int n = L * L;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (periodic_distance({a / L, a % L}, {b / L, b % L}, L) <= 1) A(a, b) -= xi * 0.2;
  return A.inverse();
}

std::vector<cplx> test_xis() {
  std::vector<cplx> xs{0.2, 0.5, 0.9, {0.5, 0.3}};
  for (double E : {0.0, 1.0})
    for (double t : {0.3, 0.8}) {
      const cplx m = boundary_m(E);
      xs.push_back(t * m * m);
      xs.push_back(t * std::norm(m));
    }
  return xs;
}

}  // namespace

TEST_CASE("theta kernel special values") {
  const auto id = theta_kernel(0.0, 5);
  CHECK(std::abs(id(0, 0) - 1.0) < 1e-15);
  for (int s = 1; s < 25; ++s) CHECK(std::abs(id.values()[s]) < 1e-15);

  const auto k = theta_kernel(0.5, 3);
  CHECK(k(0, 0).real() == doctest::Approx(13.0 / 11.0).epsilon(1e-13));
  CHECK(std::abs(k(0, 0) - dense_theta(0.5, 3)(0, 0)) < 1e-12);
  CHECK(std::abs(k.row_sum() - 2.0) < 1e-12);
  CHECK_THROWS_AS(theta_kernel(1.0, 4), std::domain_error);
  CHECK_THROWS_AS(theta_kernel({0.0, 1.2}, 4), std::domain_error);
}

TEST_CASE("theta kernel matches dense inverse and series") {
  for (int L = 3; L <= 12; ++L)
    for (const cplx xi : test_xis()) {
      const auto k = theta_kernel(xi, L);
      const auto D = dense_theta(xi, L);
      double dev = 0.0;
      for (int a = 0; a < L * L; ++a)
        for (int b = 0; b < L * L; ++b)
          dev = std::max(dev, std::abs(D(a, b) - k.entry(BlockIndex{a / L, a % L}, BlockIndex{b / L, b % L})));
      CHECK(dev <= 1e-10);
      CHECK(std::abs(k.row_sum() - 1.0 / (1.0 - xi)) <= 1e-10);
      for (int s1 = 0; s1 < L; ++s1)
        for (int s2 = 0; s2 < L; ++s2) CHECK(std::abs(k(s1, s2) - k(-s1, -s2)) < 1e-12);
      if (xi.imag() == 0.0)
        for (const auto& v : k.values()) CHECK(v.imag() == 0.0);

      const int K = 200;
      const auto ser = theta_series_oracle(xi, L, K);
      double sdev = 0.0;
      for (std::size_t i = 0; i < ser.values().size(); ++i)
        sdev = std::max(sdev, std::abs(ser.values()[i] - k.values()[i]));
      CHECK(sdev <= series_truncation_bound(xi, K) + 1e-12);
    }
}

TEST_CASE("series oracle") {
  const auto s0 = theta_series_oracle(0.5, 4, 0);
  CHECK(s0(0, 0) == cplx(1.0));
  CHECK(std::abs(s0(1, 0)) == 0.0);
  const auto s60 = theta_series_oracle(0.5, 3, 60);
  CHECK(std::abs(s60(0, 0) - 13.0 / 11.0) <= std::pow(2.0, -60) / 0.5 + 1e-15);
  double prev = 0.0;
  for (int K = 0; K <= 40; ++K) {
    const double r = theta_series_oracle(0.7, 5, K).row_sum().real();
    CHECK(r >= prev);
    CHECK(r <= 1.0 / 0.3 + 1e-12);
    prev = r;
  }
}

TEST_CASE("theta_apply") {
  const int L = 5;
  BlockField f(L * L);
  for (int i = 0; i < L * L; ++i) f[i] = cplx(std::sin(i), std::cos(3 * i));
  const auto out0 = theta_apply(theta_kernel(0.0, L), f);
  for (int i = 0; i < L * L; ++i) CHECK(std::abs(out0[i] - f[i]) < 1e-14);

  const cplx xi(0.4, 0.2);
  const auto k = theta_kernel(xi, L);
  const auto c = theta_apply(k, BlockField(L * L, 3.0));
  for (const auto& v : c) CHECK(std::abs(v - 3.0 / (1.0 - xi)) < 1e-12);

  BlockField delta(L * L, 0.0);
  delta[2 * L + 3] = 1.0;
  const auto col = theta_apply(k, delta);
  for (int a1 = 0; a1 < L; ++a1)
    for (int a2 = 0; a2 < L; ++a2) CHECK(std::abs(col[a1 * L + a2] - k(a1 - 2, a2 - 3)) < 1e-14);
  CHECK_THROWS_AS(theta_apply(k, BlockField(7)), std::invalid_argument);
}

TEST_CASE("kernels commute under composition") {
  const auto a = theta_kernel(0.6, 6), b = theta_kernel({0.3, -0.5}, 6);
  const auto ab = compose(a, b), ba = compose(b, a);
  for (std::size_t i = 0; i < ab.values().size(); ++i) CHECK(std::abs(ab.values()[i] - ba.values()[i]) < 1e-12);
}

TEST_CASE("heat kernel") {
  CHECK(heat_kernel(0, 1).at(0, 0) == 1.0);
  CHECK(heat_kernel(1, 2).at(1, 0) == doctest::Approx(0.2));
  CHECK(heat_kernel(2, 3).at(0, 0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(heat_kernel(3, 3), std::invalid_argument);
  const auto h = heat_kernel(7, 9);
  CHECK(h.total() == doctest::Approx(1.0).epsilon(1e-13));
  for (int i = -9; i <= 9; ++i)
    for (int j = -9; j <= 9; ++j) {
      CHECK(h.at(i, j) >= 0.0);
      CHECK(h.at(i, j) == doctest::Approx(h.at(-i, j)));
      CHECK(h.at(i, j) == doctest::Approx(h.at(j, i)));
    }
  double C = 0.0;
  for (int k = 0; k <= 256; k += 8) C = std::max(C, heat_kernel(k, k + 1).at(0, 0) * (1.0 + k));
  CHECK(C <= 5.0);
}

TEST_CASE("decay and derivative diagnostics") {
  for (int L : {8, 12})
    for (double xi : {0.2, 0.5, 0.75, 0.9, 0.95}) {
      const auto k = theta_kernel(xi, L);
      const auto fit = fit_decay(k);
      if (fit.admissible) {
        CHECK(fit.c > 0.05);
        CHECK(fit.C <= 100.0);
      }
      const auto d = fit_derivatives(k);
      CHECK(d.C1 <= 100.0);
      CHECK(d.C2 <= 100.0);
    }
  CHECK(fit_decay(theta_kernel(0.5, 8)).admissible);
  CHECK_FALSE(fit_decay(theta_kernel(0.99, 8)).admissible);
}

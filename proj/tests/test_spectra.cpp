#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bandlab/spectra.hpp"

using namespace bandlab;

TEST_CASE("eigensystem invariants") {
  const auto h = sample_band(VarianceProfile(BlockGeometry(3, 4)), {1, 2});
  const auto eig = eigensystem(h);
  const auto r = eigen_residuals(h.H, eig);
  CHECK(r.reconstruction <= 1e-8 * h.H.cwiseAbs().maxCoeff() * h.N());
  CHECK(r.orthogonality <= 1e-10);
  CHECK(std::is_sorted(eig.lambda.begin(), eig.lambda.end()));
  CHECK(std::abs(eig.lambda.sum() - h.H.trace().real()) <= 1e-9 * h.N());

  BandSample z;
  z.H = CMatrix::Zero(4, 4);
  const auto ez = eigensystem(z);
  CHECK(ez.lambda.cwiseAbs().maxCoeff() == 0.0);
  BandSample p;
  p.H = CMatrix::Zero(2, 2);
  p.H(0, 1) = p.H(1, 0) = 1.0;
  const auto ep = eigensystem(p);
  CHECK(ep.lambda(0) == doctest::Approx(-1.0));
  CHECK(ep.lambda(1) == doctest::Approx(1.0));
}

TEST_CASE("resolvent identities") {
  BandSample z;
  z.H = CMatrix::Zero(5, 5);
  const auto G0 = Resolvent::from_eigensystem(eigensystem(z), {0.0, 1.0});
  CHECK((G0.matrix() - cplx(0.0, 1.0) * CMatrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(Resolvent::from_eigensystem(eigensystem(z), 0.3), std::domain_error);

  const auto h = sample_band(VarianceProfile(BlockGeometry(3, 4)), {4, 4});
  const auto eig = eigensystem(h);
  const cplx zz(0.3, 0.05);
  const auto G = Resolvent::from_eigensystem(eig, zz);
  CMatrix hz = h.H;
  hz.diagonal().array() -= zz;
  CHECK((hz * G.matrix() - CMatrix::Identity(h.N(), h.N())).cwiseAbs().maxCoeff() <= 1e-8);
  const CMatrix& g = G.matrix();
  const CMatrix ward = g * g.adjoint() - (g - g.adjoint()) / (cplx(0.0, 2.0) * zz.imag());
  CHECK(ward.cwiseAbs().maxCoeff() <= 1e-10 * g.cwiseAbs2().maxCoeff() * h.N());
  const auto Gd = Resolvent::direct(h.H, zz);
  CHECK((Gd.matrix() - g).cwiseAbs().maxCoeff() < 1e-9);

  const auto Gs = Resolvent::from_eigensystem(eig, zz, 0.7);
  const auto Gsd = Resolvent::direct(h.H, zz, 0.7);
  CHECK((Gs.matrix() - Gsd.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("local law statistics") {
  const BlockGeometry geom(3, 4);
  const VarianceProfile S(geom);
  const auto eig = eigensystem(sample_band(S, {8, 0}));
  const auto st = local_law_stats(eig, {0.1, 0.2}, S);
  CHECK(st.max_block_trace_dev <= st.max_entry_dev);
  CHECK(st.M_eta == doctest::Approx(control_parameter(0.2, geom)));
  const auto Gs = Resolvent::from_eigensystem(eig, {0.1, 0.2}, 0.5);
  CHECK_THROWS_AS(local_law_stats(Gs, S), std::invalid_argument);
}

TEST_CASE("delocalisation statistic") {
  EigenSystem flat;
  const int N = 16;
  flat.lambda = RVector::LinSpaced(N, -1.0, 1.0);
  flat.psi = CMatrix::Constant(N, N, 1.0 / std::sqrt(N));
  CHECK(deloc_stat(flat, 0.5) == doctest::Approx(1.0));
  EigenSystem basis;
  basis.lambda = flat.lambda;
  basis.psi = CMatrix::Identity(N, N);
  CHECK(deloc_stat(basis, 0.5) == doctest::Approx(N));
  basis.lambda = RVector::Constant(N, 3.0);
  CHECK_THROWS_AS(deloc_stat(basis, 0.5), std::domain_error);

  const auto eig = eigensystem(sample_band(VarianceProfile(BlockGeometry(2, 4)), {1, 1}));
  CHECK(deloc_stat(eig, 0.5) >= 1.0);
}

TEST_CASE("QUE statistic") {
  const BlockGeometry geom(2, 3);
  const int N = static_cast<int>(geom.N());
  EigenSystem one;
  one.lambda = RVector::Constant(1, 0.0);
  one.psi = CMatrix::Constant(N, 1, 1.0 / std::sqrt(N));
  CHECK(que_stat(one, geom, 0.0, BlockIndex{1, 2}, 1) == doctest::Approx(0.0).scale(1.0));

  EigenSystem basis;
  basis.lambda = RVector::Constant(1, 0.0);
  basis.psi = CMatrix::Zero(N, 1);
  basis.psi(geom.flat(SiteIndex{0, 1}), 0) = 1.0;
  const double L2 = 9.0;
  CHECK(que_stat(basis, geom, 0.0, BlockIndex{0, 0}, 1) == doctest::Approx((L2 - 1) * (L2 - 1)));

  const auto eig = eigensystem(sample_band(VarianceProfile(geom), {2, 2}));
  CHECK(que_stat(eig, geom, 0.0, BlockIndex{1, 1}, 4) >= 0.0);
  const auto w = nearest_window(eig.lambda, 0.0, 4);
  CHECK(w.size() == 4);
}

TEST_CASE("gap ratio statistics") {
  RVector fence = RVector::LinSpaced(50, -1.0, 1.0);
  const auto s = gap_ratio_stats(fence, 0.5);
  CHECK(s.mean_r_tilde == doctest::Approx(1.0));
  CHECK_THROWS_AS(gap_ratio_stats(RVector::LinSpaced(2, -1.0, 1.0), 0.5), std::domain_error);

  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pts(1000001);
  for (auto& p : pts) p = u(eng);
  std::sort(pts.begin(), pts.end());
  const auto pois = gap_ratio_stats(pts);
  CHECK(pois.count == 999999);
  CHECK(pois.mean_r_tilde == doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(0.005));

  const auto eig = eigensystem(sample_gue(200, {1, 0}), false);
  const auto a = gap_ratio_stats(eig, 0.5);
  RVector scaled = 3.0 * eig.lambda.array() + 0.25;
  std::vector<double> v(scaled.data(), scaled.data() + scaled.size());
  std::vector<double> bulk;
  for (std::size_t k : bulk_window(eig.lambda, 0.5)) bulk.push_back(v[k]);
  CHECK(gap_ratio_stats(bulk).mean_r_tilde == doctest::Approx(a.mean_r_tilde).epsilon(1e-12));
}

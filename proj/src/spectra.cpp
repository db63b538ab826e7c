#include "bandlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace bandlab {

EigenSystem eigensystem(const BandSample& h, bool want_vectors) {
  EigenSystem eig;
  hermitian_eigen(h.H, want_vectors, eig.lambda, eig.psi);
  eig.seed = h.seed;
  eig.ensemble = h.ensemble;

  const double frob = h.H.squaredNorm();
  const double spec = eig.lambda.squaredNorm();
  const double trace = h.H.diagonal().real().sum();
  const double dev_frob = std::abs(frob - spec) / std::max(frob, 1e-300);
  const double dev_trace = std::abs(trace - eig.lambda.sum());
  if ((frob > 0.0 && dev_frob > 1e-8) || dev_trace > 1e-9 * static_cast<double>(h.N())) {
    std::ostringstream msg;
    msg << "eigensystem failed consistency check: relative Frobenius residual " << dev_frob
        << ", trace residual " << dev_trace;
    throw std::runtime_error(msg.str());
  }
  return eig;
}

EigenResiduals eigen_residuals(const CMatrix& h, const EigenSystem& eig) {
  if (!eig.has_vectors()) throw std::invalid_argument("eigen_residuals needs eigenvectors");
  EigenResiduals r;
  const CMatrix hp = h * eig.psi;
  const CMatrix pl = eig.psi * eig.lambda.cast<cplx>().asDiagonal();
  r.reconstruction = (hp - pl).cwiseAbs().maxCoeff();
  const CMatrix gram = eig.psi.adjoint() * eig.psi;
  r.orthogonality = (gram - CMatrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  return r;
}

Resolvent Resolvent::from_eigensystem(const EigenSystem& eig, cplx z, double scale) {
  if (z.imag() == 0.0) throw std::domain_error("resolvent requires Im z != 0");
  if (!eig.has_vectors()) throw std::invalid_argument("resolvent requires eigenvectors");
  CVector d(eig.lambda.size());
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = 1.0 / (scale * eig.lambda(k) - z);
  const CMatrix left = eig.psi * d.asDiagonal();
  return Resolvent(left * eig.psi.adjoint(), z, scale);
}

Resolvent Resolvent::direct(const CMatrix& h, cplx z, double scale) {
  if (z.imag() == 0.0) throw std::domain_error("resolvent requires Im z != 0");
  return Resolvent(shifted_inverse(h, scale, z), z, scale);
}

LocalLawStats local_law_stats(const Resolvent& G, const VarianceProfile& profile) {
  if (G.scale() != 1.0) throw std::invalid_argument("local_law_stats expects an unscaled resolvent");
  const BlockGeometry& geom = profile.geometry();
  if (G.N() != geom.N()) throw std::invalid_argument("local_law_stats: dimension mismatch");
  const cplx m = semicircle_m(G.z());
  const CMatrix& g = G.matrix();
  LocalLawStats s;
  s.M_eta = control_parameter(G.z().imag(), geom);
  const auto N = static_cast<Eigen::Index>(G.N());
  for (Eigen::Index y = 0; y < N; ++y)
    for (Eigen::Index x = 0; x < N; ++x) {
      const cplx v = x == y ? g(x, y) - m : g(x, y);
      s.max_entry_dev = std::max(s.max_entry_dev, std::abs(v));
    }
  std::vector<cplx> trace(geom.block_count(), 0.0);
  for (Eigen::Index x = 0; x < N; ++x) trace[geom.block_of_flat(x)] += g(x, x);
  const double inv_w2 = 1.0 / static_cast<double>(geom.block_size());
  for (const cplx& t : trace) s.max_block_trace_dev = std::max(s.max_block_trace_dev, std::abs(t * inv_w2 - m));
  return s;
}

LocalLawStats local_law_stats(const EigenSystem& eig, cplx z, const VarianceProfile& profile) {
  return local_law_stats(Resolvent::from_eigensystem(eig, z), profile);
}

std::vector<std::size_t> bulk_window(const RVector& lambda, double kappa) {
  std::vector<std::size_t> out;
  for (Eigen::Index k = 0; k < lambda.size(); ++k)
    if (std::abs(lambda(k)) <= 2.0 - kappa) out.push_back(static_cast<std::size_t>(k));
  return out;
}

double deloc_stat(const EigenSystem& eig, double kappa) {
  if (!eig.has_vectors()) throw std::invalid_argument("deloc_stat needs eigenvectors");
  const auto bulk = bulk_window(eig.lambda, kappa);
  if (bulk.empty()) throw std::domain_error("deloc_stat: empty bulk window");
  double best = 0.0;
  for (std::size_t k : bulk) best = std::max(best, eig.psi.col(k).cwiseAbs2().maxCoeff());
  return static_cast<double>(eig.N()) * best;
}

std::vector<std::size_t> nearest_window(const RVector& lambda, double E, std::size_t window) {
  std::vector<std::size_t> idx(lambda.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t w = std::min(window, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + w, idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(lambda(a) - E), db = std::abs(lambda(b) - E);
    return da != db ? da < db : a < b;
  });
  idx.resize(w);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double que_stat(const EigenSystem& eig, const BlockGeometry& geom, double E,
                const std::vector<BlockIndex>& A, std::size_t window) {
  if (!eig.has_vectors()) throw std::invalid_argument("que_stat needs eigenvectors");
  if (static_cast<std::size_t>(eig.psi.rows()) != geom.N()) throw std::invalid_argument("que_stat: dimension mismatch");
  if (A.empty()) throw std::invalid_argument("que_stat: empty block set");
  const auto win = nearest_window(eig.lambda, E, window);
  if (win.empty()) throw std::domain_error("que_stat: empty eigenvalue window");

  std::vector<Eigen::Index> rows;
  for (const auto& a : A)
    for (std::size_t x : block_site_indices(a, geom)) rows.push_back(static_cast<Eigen::Index>(x));
  const Eigen::Index w = static_cast<Eigen::Index>(win.size());
  CMatrix P(static_cast<Eigen::Index>(rows.size()), w);
  for (Eigen::Index j = 0; j < w; ++j)
    for (std::size_t r = 0; r < rows.size(); ++r) P(r, j) = eig.psi(rows[r], win[j]);

  const double N = static_cast<double>(geom.N());
  const double weight = 1.0 / (static_cast<double>(geom.block_size()) * A.size());
  const CMatrix overlap = P.adjoint() * P;
  double best = 0.0;
  for (Eigen::Index k = 0; k < w; ++k)
    for (Eigen::Index l = 0; l < w; ++l) {
      const cplx v = N * (weight * overlap(k, l) - (k == l ? 1.0 / N : 0.0));
      best = std::max(best, std::norm(v));
    }
  return best;
}

double que_stat(const EigenSystem& eig, const BlockGeometry& geom, double E, BlockIndex a,
                std::size_t window) {
  return que_stat(eig, geom, E, std::vector<BlockIndex>{a}, window);
}

GapRatioStats gap_ratio_stats(const std::vector<double>& sorted) {
  if (sorted.size() < 3) throw std::domain_error("gap_ratio_stats needs at least 3 eigenvalues");
  GapRatioStats s;
  for (std::size_t k = 0; k + 2 < sorted.size(); ++k) {
    const double d1 = sorted[k + 1] - sorted[k], d2 = sorted[k + 2] - sorted[k + 1];
    const double hi = std::max(d1, d2);
    const double r = hi > 0.0 ? std::min(d1, d2) / hi : 1.0;
    s.sum += r;
    s.sum_sq += r * r;
    ++s.count;
  }
  s.mean_r_tilde = s.sum / static_cast<double>(s.count);
  return s;
}

GapRatioStats gap_ratio_stats(const RVector& lambda, double kappa) {
  std::vector<double> bulk;
  for (std::size_t k : bulk_window(lambda, kappa)) bulk.push_back(lambda(k));
  return gap_ratio_stats(bulk);
}

GapRatioStats gap_ratio_stats(const EigenSystem& eig, double kappa) {
  return gap_ratio_stats(eig.lambda, kappa);
}

}  // namespace bandlab

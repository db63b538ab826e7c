#pragma once

// Eigendecomposition, resolvents and the eigen-level statistics.

#include <complex>
#include <cstddef>
#include <vector>

#include "bandlab/linalg.hpp"
#include "bandlab/model.hpp"
#include "bandlab/sampler.hpp"

namespace bandlab {

struct EigenSystem {
  RVector lambda;  ///< ascending
  CMatrix psi;     ///< column k is the eigenvector of lambda(k); empty if values only
  SeedSpec seed;
  Ensemble ensemble = Ensemble::band;

  std::size_t N() const { return static_cast<std::size_t>(lambda.size()); }
  bool has_vectors() const { return psi.size() > 0; }
};

/// Dense Hermitian solve. Throws std::runtime_error carrying the residual when
/// the decomposition fails its consistency check.
EigenSystem eigensystem(const BandSample& h, bool want_vectors = true);

/// max |H Psi - Psi Lambda| and max |Psi* Psi - I|.
struct EigenResiduals {
  double reconstruction = 0.0;
  double orthogonality = 0.0;
};
EigenResiduals eigen_residuals(const CMatrix& h, const EigenSystem& eig);

/// Dense resolvent G = (s*H - z)^-1 with s a rescaling of the spectrum
/// (s = sqrt(t) realises H_t = sqrt(t) H).
class Resolvent {
 public:
  /// From the eigensystem: Psi diag(1/(s*lambda - z)) Psi*.
  /// Throws std::domain_error for real z or std::invalid_argument without eigenvectors.
  static Resolvent from_eigensystem(const EigenSystem& eig, cplx z, double scale = 1.0);
  /// From an LU solve of s*H - z.
  static Resolvent direct(const CMatrix& h, cplx z, double scale = 1.0);

  cplx z() const { return z_; }
  double scale() const { return scale_; }
  const CMatrix& matrix() const { return G_; }
  std::size_t N() const { return static_cast<std::size_t>(G_.rows()); }

 private:
  Resolvent(CMatrix G, cplx z, double scale) : G_(std::move(G)), z_(z), scale_(scale) {}
  CMatrix G_;
  cplx z_;
  double scale_;
};

struct LocalLawStats {
  double max_entry_dev = 0.0;        ///< max_xy |G_xy - m delta_xy|
  double max_block_trace_dev = 0.0;  ///< max_a |W^-2 sum_{x in I_a} G_xx - m|
  double M_eta = 0.0;
};

/// Requires an unscaled resolvent (scale 1).
LocalLawStats local_law_stats(const Resolvent& G, const VarianceProfile& profile);
LocalLawStats local_law_stats(const EigenSystem& eig, cplx z, const VarianceProfile& profile);

/// Indices k with |lambda_k| <= 2 - kappa.
std::vector<std::size_t> bulk_window(const RVector& lambda, double kappa);

/// max over bulk k of N max_x |psi_k(x)|^2. Throws std::domain_error on an
/// empty bulk window.
double deloc_stat(const EigenSystem& eig, double kappa);

/// Indices of the `window` eigenvalues closest to E, ascending.
std::vector<std::size_t> nearest_window(const RVector& lambda, double E, std::size_t window);

/// max over pairs (k, l) in the window of |N (W^-2 sum_{x in I_a} psi_k(x) conj(psi_l(x)) - delta_kl / N)|^2.
/// Throws std::domain_error when the window is empty.
double que_stat(const EigenSystem& eig, const BlockGeometry& geom, double E, BlockIndex a,
                std::size_t window);

/// Subset variant: E_A = sum_{a in A} E_a, normalised by |A|.
double que_stat(const EigenSystem& eig, const BlockGeometry& geom, double E,
                const std::vector<BlockIndex>& A, std::size_t window);

struct GapRatioStats {
  double mean_r_tilde = 0.0;
  std::size_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
};

/// r_k = min(d_k, d_{k+1}) / max(d_k, d_{k+1}) over consecutive bulk triples.
/// Throws std::domain_error with fewer than 3 bulk eigenvalues.
GapRatioStats gap_ratio_stats(const RVector& lambda, double kappa);
GapRatioStats gap_ratio_stats(const EigenSystem& eig, double kappa);
/// Same statistic over all consecutive triples of an ascending sequence.
GapRatioStats gap_ratio_stats(const std::vector<double>& sorted);

}  // namespace bandlab

#pragma once

// Variance profile of the block band ensemble, the semicircle transform and
// the characteristic-flow parameters z_t, eta_t, ell_t, M_t.

#include <complex>
#include <optional>

#include "bandlab/lattice.hpp"

namespace bandlab {

using cplx = std::complex<double>;

/// S = S^(B) (x) S_W with S^(B)_ab = 1/5 on |a-b|_L <= 1 and (S_W)_ij = W^-2.
class VarianceProfile {
 public:
  explicit VarianceProfile(BlockGeometry geom) : geom_(geom) {}

  const BlockGeometry& geometry() const { return geom_; }

  /// S^(B)_ab.
  double block_entry(BlockIndex a, BlockIndex b) const {
    return periodic_distance(a, b, geom_.L()) <= 1 ? 0.2 : 0.0;
  }
  /// S_xy.
  double entry(SiteIndex x, SiteIndex y) const;
  double entry_flat(std::size_t x, std::size_t y) const;

 private:
  BlockGeometry geom_;
};

double variance_entry(SiteIndex x, SiteIndex y, const VarianceProfile& profile);

/// Fourier symbol of S^(B) at frequency (k1, k2) on Z_L^2.
double stencil_symbol(int k1, int k2, int L);

/// Stieltjes transform of the semicircle law, branch with Im m > 0.
/// Throws std::domain_error when Im z <= 0.
cplx semicircle_m(cplx z);

/// Boundary value m^(E) = lim_{eps->0+} m(E + i eps) for |E| < 2.
/// Throws std::domain_error when |E| >= 2.
cplx boundary_m(double E);

struct SpectralParams {
  double E = 0.0;
  double t = 0.0;
  cplx z_t;      ///< E + (1-t) m^(E)
  double eta_t;  ///< Im z_t
  cplx m_E;      ///< m^(E)

  /// m(sigma): m^(E) for '+', its conjugate for '-'.
  cplx m(bool plus) const { return plus ? m_E : std::conj(m_E); }
};

struct ScaleParams {
  double ell_t;  ///< min(|1-t|^-1/2, L)
  double ell_z;  ///< min(eta^-1/2, L) + 1, evaluated at eta = eta_t
  double M_t;    ///< W^2 ell_t^2 eta_t
  double M_eta;  ///< W^2 ell_z^2 eta_t
};

struct FlowPoint {
  SpectralParams spectral;
  ScaleParams scale;
};

/// Throws std::domain_error for |E| >= 2 or t outside [0, 1).
FlowPoint flow_point(double E, double t, const BlockGeometry& geom);

/// Same as flow_point(...).spectral, without needing a geometry.
SpectralParams spectral_params(double E, double t);

/// ell(z) = min(eta^-1/2, L) + 1.
double ell_of_eta(double eta, int L);
/// M_eta = W^2 ell(z)^2 eta.
double control_parameter(double eta, const BlockGeometry& geom);
/// hat ell(xi) = min(|1-xi|^-1/2, L).
double ell_hat(cplx xi, int L);

struct FlowInverse {
  double E;
  double t;
};

/// Finds (E, t) with z = t^-1/2 z_t^(E). Empty when Im z <= 0, |Re z| >= 2
/// or the solution fails the round trip.
std::optional<FlowInverse> inverse_flow(cplx z);
/// Geometry-taking form; the solution does not depend on W or L.
std::optional<FlowInverse> inverse_flow(cplx z, const BlockGeometry& geom);

}  // namespace bandlab

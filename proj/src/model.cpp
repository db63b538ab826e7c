#include "bandlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bandlab {

double VarianceProfile::entry(SiteIndex x, SiteIndex y) const {
  const double w2 = static_cast<double>(geom_.block_size());
  return block_entry(block_of(x, geom_), block_of(y, geom_)) / w2;
}

double VarianceProfile::entry_flat(std::size_t x, std::size_t y) const {
  return entry(geom_.site(x), geom_.site(y));
}

double variance_entry(SiteIndex x, SiteIndex y, const VarianceProfile& profile) {
  return profile.entry(x, y);
}

double stencil_symbol(int k1, int k2, int L) {
  const double w = 2.0 * std::numbers::pi / L;
  return 0.2 * (1.0 + 2.0 * std::cos(w * k1) + 2.0 * std::cos(w * k2));
}

cplx semicircle_m(cplx z) {
  if (!(z.imag() > 0.0)) throw std::domain_error("semicircle_m requires Im z > 0");
  const cplx r = std::sqrt(z * z - 4.0);
  cplx m = 0.5 * (-z + r);
  if (m.imag() <= 0.0) m = 0.5 * (-z - r);
  return m;
}

cplx boundary_m(double E) {
  if (!(std::abs(E) < 2.0)) throw std::domain_error("boundary_m requires |E| < 2");
  return {-0.5 * E, 0.5 * std::sqrt(4.0 - E * E)};
}

SpectralParams spectral_params(double E, double t) {
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("flow time t must lie in [0, 1)");
  SpectralParams p;
  p.E = E;
  p.t = t;
  p.m_E = boundary_m(E);
  p.z_t = E + (1.0 - t) * p.m_E;
  p.eta_t = p.z_t.imag();
  return p;
}

double ell_of_eta(double eta, int L) {
  return std::min(1.0 / std::sqrt(eta), static_cast<double>(L)) + 1.0;
}

double control_parameter(double eta, const BlockGeometry& geom) {
  const double ell = ell_of_eta(eta, geom.L());
  return static_cast<double>(geom.block_size()) * ell * ell * eta;
}

double ell_hat(cplx xi, int L) {
  const double d = std::abs(1.0 - xi);
  if (d == 0.0) return L;
  return std::min(1.0 / std::sqrt(d), static_cast<double>(L));
}

FlowPoint flow_point(double E, double t, const BlockGeometry& geom) {
  FlowPoint fp;
  fp.spectral = spectral_params(E, t);
  const double eta = fp.spectral.eta_t;
  const double w2 = static_cast<double>(geom.block_size());
  ScaleParams& s = fp.scale;
  s.ell_t = std::min(1.0 / std::sqrt(1.0 - t), static_cast<double>(geom.L()));
  s.ell_z = ell_of_eta(eta, geom.L());
  s.M_t = w2 * s.ell_t * s.ell_t * eta;
  s.M_eta = w2 * s.ell_z * s.ell_z * eta;
  return fp;
}

// m_sc(z) = sqrt(t) m^(E) with |m^(E)| = 1 fixes t = |m_sc(z)|^2 and the
// phase of m^(E); E then follows from m^(E) = (-E + i sqrt(4-E^2))/2.
std::optional<FlowInverse> inverse_flow(cplx z) {
  if (!(z.imag() > 0.0 && std::abs(z.real()) < 2.0)) return std::nullopt;
  const cplx m = semicircle_m(z);
  const double t = std::norm(m);
  if (!(t > 0.0 && t < 1.0)) return std::nullopt;
  const cplx mE = m / std::abs(m);
  const double E = -2.0 * mE.real();
  if (!(std::abs(E) < 2.0)) return std::nullopt;
  const SpectralParams p = spectral_params(E, t);
  const cplx back = p.z_t / std::sqrt(t);
  if (std::abs(back - z) > 1e-10 * std::max(1.0, std::abs(z))) return std::nullopt;
  return FlowInverse{E, t};
}

std::optional<FlowInverse> inverse_flow(cplx z, const BlockGeometry&) { return inverse_flow(z); }

}  // namespace bandlab

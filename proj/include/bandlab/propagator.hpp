#pragma once

// Block propagator Theta_xi = (1 - xi S^(B))^-1 on the L x L torus.
//
// Theta_xi is circulant, so it is stored as a single kernel k(s) with
// (Theta_xi)_ab = k(a - b mod L). The kernel array is indexed s1*L + s2.

#include <complex>
#include <vector>

#include "bandlab/lattice.hpp"

namespace bandlab {

using cplx = std::complex<double>;

/// A complex field over Z_L^2, indexed a1*L + a2.
using BlockField = std::vector<cplx>;

class PropagatorKernel {
 public:
  PropagatorKernel(int L, cplx xi, std::vector<cplx> values);

  int L() const { return L_; }
  cplx xi() const { return xi_; }
  const std::vector<cplx>& values() const { return k_; }

  /// k(s1, s2) with both offsets reduced mod L.
  cplx operator()(int s1, int s2) const { return k_[wrap(s1, L_) * L_ + wrap(s2, L_)]; }
  /// (Theta_xi)_ab.
  cplx entry(BlockIndex a, BlockIndex b) const { return (*this)(a.a1 - b.a1, a.a2 - b.a2); }
  cplx row_sum() const;

 private:
  int L_;
  cplx xi_;
  std::vector<cplx> k_;
};

/// Exact kernel by Fourier diagonalisation. Throws std::domain_error when
/// |xi| >= 1 or 1 - xi*lambda(k) vanishes at some frequency.
PropagatorKernel theta_kernel(cplx xi, int L);

/// Partial sum sum_{k <= K_max} xi^k (S^(B))^k by repeated stencil application.
PropagatorKernel theta_series_oracle(cplx xi, int L, int K_max);

/// Entrywise truncation bound |xi|^(K_max+1) / (1 - |xi|) for the series oracle.
double series_truncation_bound(cplx xi, int K_max);

/// One application of S^(B) to a field.
BlockField stencil_apply(const BlockField& field, int L);

/// Circular convolution (Theta_xi field)(a) = sum_b k(a-b) field(b).
/// Throws std::invalid_argument on a size mismatch.
BlockField theta_apply(const PropagatorKernel& kernel, const BlockField& field);

/// Kernel of the composition Theta_xi Theta_xi'.
PropagatorKernel compose(const PropagatorKernel& lhs, const PropagatorKernel& rhs);

/// p_k(0, .) for the lazy walk on Z^2 (mass 1/5 on the origin and each
/// neighbour), stored on the window [-half_width, half_width]^2.
class HeatKernelTable {
 public:
  HeatKernelTable(int steps, int half_width, std::vector<double> p);

  int steps() const { return steps_; }
  int half_width() const { return h_; }
  /// p_k(0, (d1, d2)); zero outside the window.
  double at(int d1, int d2) const;
  double total() const;

 private:
  int steps_;
  int h_;
  std::vector<double> p_;
};

/// Throws std::invalid_argument unless steps >= 0 and half_width > steps.
HeatKernelTable heat_kernel(int steps, int half_width);

struct DecayFit {
  bool admissible = false;  ///< xi real in (0,1) with ell_hat(xi) <= L/4
  double ell_hat = 0.0;
  double c = 0.0;  ///< minus the fitted slope of log max|k| against |s|/ell_hat
  double C = 0.0;  ///< smallest C with |k(s)| <= C e^(-c|s|/ell_hat) / (|1-xi| ell_hat^2)
};

/// Least-squares fit of the exponential decay profile of |k|.
DecayFit fit_decay(const PropagatorKernel& kernel);

/// e^(-c|s|/ell_hat) / (|1-xi| ell_hat^2).
double decay_envelope_value(const PropagatorKernel& kernel, int s1, int s2, double c);

struct DerivativeFit {
  double C1 = 0.0;  ///< max of |k(s) - k(s+e)| over the first-difference envelope
  double C2 = 0.0;  ///< max of |2k(s) - k(s+e) - k(s-e)| over the second-difference envelope
};

/// Fits the constants in the first and second difference bounds over all s
/// and unit steps e.
DerivativeFit fit_derivatives(const PropagatorKernel& kernel);

}  // namespace bandlab

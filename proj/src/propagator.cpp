#include "bandlab/propagator.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "bandlab/model.hpp"

namespace bandlab {

namespace {

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// In-place 2D inverse DFT without normalisation.
void inverse_dft_2d(std::vector<cplx>& data, int L) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  std::lock_guard<std::mutex> lock(fftw_mutex());
  fftw_plan plan = fftw_plan_dft_2d(L, L, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

void require_side(int L) {
  if (L < 3) throw std::invalid_argument("side length L must be >= 3");
}

}  // namespace

PropagatorKernel::PropagatorKernel(int L, cplx xi, std::vector<cplx> values)
    : L_(L), xi_(xi), k_(std::move(values)) {
  if (k_.size() != static_cast<std::size_t>(L) * L)
    throw std::invalid_argument("kernel array must hold L*L values");
}

cplx PropagatorKernel::row_sum() const {
  cplx s = 0.0;
  for (const auto& v : k_) s += v;
  return s;
}

PropagatorKernel theta_kernel(cplx xi, int L) {
  require_side(L);
  if (!(std::abs(xi) < 1.0)) throw std::domain_error("theta_kernel requires |xi| < 1");
  std::vector<cplx> data(static_cast<std::size_t>(L) * L);
  for (int k1 = 0; k1 < L; ++k1) {
    for (int k2 = 0; k2 < L; ++k2) {
      const cplx denom = 1.0 - xi * stencil_symbol(k1, k2, L);
      if (std::abs(denom) < 1e-14) throw std::domain_error("singular propagator: 1 - xi*lambda(k) = 0");
      data[k1 * L + k2] = 1.0 / denom;
    }
  }
  inverse_dft_2d(data, L);
  const double scale = 1.0 / (static_cast<double>(L) * L);
  for (auto& v : data) v *= scale;
  if (xi.imag() == 0.0)
    for (auto& v : data) v = v.real();
  return PropagatorKernel(L, xi, std::move(data));
}

BlockField stencil_apply(const BlockField& f, int L) {
  if (f.size() != static_cast<std::size_t>(L) * L) throw std::invalid_argument("field size must be L*L");
  BlockField out(f.size());
  for (int a1 = 0; a1 < L; ++a1) {
    const int up = wrap(a1 + 1, L) * L, dn = wrap(a1 - 1, L) * L, row = a1 * L;
    for (int a2 = 0; a2 < L; ++a2) {
      const int r = wrap(a2 + 1, L), l = wrap(a2 - 1, L);
      out[row + a2] = 0.2 * (f[row + a2] + f[up + a2] + f[dn + a2] + f[row + r] + f[row + l]);
    }
  }
  return out;
}

PropagatorKernel theta_series_oracle(cplx xi, int L, int K_max) {
  require_side(L);
  if (!(std::abs(xi) < 1.0)) throw std::domain_error("theta_series_oracle requires |xi| < 1");
  if (K_max < 0) throw std::invalid_argument("K_max must be >= 0");
  BlockField term(static_cast<std::size_t>(L) * L, 0.0);
  term[0] = 1.0;
  BlockField sum = term;
  for (int k = 1; k <= K_max; ++k) {
    term = stencil_apply(term, L);
    for (auto& v : term) v *= xi;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += term[i];
  }
  return PropagatorKernel(L, xi, std::move(sum));
}

double series_truncation_bound(cplx xi, int K_max) {
  const double r = std::abs(xi);
  return std::pow(r, K_max + 1) / (1.0 - r);
}

BlockField theta_apply(const PropagatorKernel& kernel, const BlockField& field) {
  const int L = kernel.L();
  if (field.size() != static_cast<std::size_t>(L) * L)
    throw std::invalid_argument("theta_apply: field size does not match kernel side length");
  BlockField out(field.size(), 0.0);
  const auto& k = kernel.values();
  for (int a1 = 0; a1 < L; ++a1)
    for (int a2 = 0; a2 < L; ++a2) {
      cplx acc = 0.0;
      for (int b1 = 0; b1 < L; ++b1) {
        const int s1 = wrap(a1 - b1, L) * L;
        for (int b2 = 0; b2 < L; ++b2) acc += k[s1 + wrap(a2 - b2, L)] * field[b1 * L + b2];
      }
      out[a1 * L + a2] = acc;
    }
  return out;
}

PropagatorKernel compose(const PropagatorKernel& lhs, const PropagatorKernel& rhs) {
  if (lhs.L() != rhs.L()) throw std::invalid_argument("compose: side lengths differ");
  return PropagatorKernel(lhs.L(), lhs.xi(), theta_apply(lhs, rhs.values()));
}

HeatKernelTable::HeatKernelTable(int steps, int half_width, std::vector<double> p)
    : steps_(steps), h_(half_width), p_(std::move(p)) {}

double HeatKernelTable::at(int d1, int d2) const {
  if (std::abs(d1) > h_ || std::abs(d2) > h_) return 0.0;
  const int w = 2 * h_ + 1;
  return p_[(d1 + h_) * w + (d2 + h_)];
}

double HeatKernelTable::total() const {
  double s = 0.0;
  for (double v : p_) s += v;
  return s;
}

HeatKernelTable heat_kernel(int steps, int half_width) {
  if (steps < 0) throw std::invalid_argument("heat_kernel: steps must be >= 0");
  if (half_width <= steps) throw std::invalid_argument("heat_kernel: half_width must exceed steps");
  const int w = 2 * half_width + 1;
  std::vector<double> p(static_cast<std::size_t>(w) * w, 0.0), next(p.size());
  p[half_width * w + half_width] = 1.0;
  for (int k = 0; k < steps; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int i = 1; i < w - 1; ++i)
      for (int j = 1; j < w - 1; ++j)
        next[i * w + j] = 0.2 * (p[i * w + j] + p[(i + 1) * w + j] + p[(i - 1) * w + j] +
                                 p[i * w + j + 1] + p[i * w + j - 1]);
    p.swap(next);
  }
  return HeatKernelTable(steps, half_width, std::move(p));
}

double decay_envelope_value(const PropagatorKernel& kernel, int s1, int s2, double c) {
  const int L = kernel.L();
  const double lh = ell_hat(kernel.xi(), L);
  const double d = static_cast<double>(periodic_distance(s1, s2, L));
  return std::exp(-c * d / lh) / (std::abs(1.0 - kernel.xi()) * lh * lh);
}

DecayFit fit_decay(const PropagatorKernel& kernel) {
  const int L = kernel.L();
  const cplx xi = kernel.xi();
  DecayFit fit;
  fit.ell_hat = ell_hat(xi, L);
  fit.admissible = xi.imag() == 0.0 && xi.real() > 0.0 && xi.real() < 1.0 && fit.ell_hat <= L / 4.0;

  const int dmax = 2 * (L / 2);
  std::vector<double> peak(dmax + 1, 0.0);
  for (int s1 = 0; s1 < L; ++s1)
    for (int s2 = 0; s2 < L; ++s2) {
      const int d = periodic_distance(s1, s2, L);
      peak[d] = std::max(peak[d], std::abs(kernel(s1, s2)));
    }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int d = 0; d <= dmax; ++d) {
    if (!(peak[d] > 0.0)) continue;
    const double x = d / fit.ell_hat, y = std::log(peak[d]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
  }
  if (n >= 2) {
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.c = -slope;
  }
  const double norm = std::abs(1.0 - xi) * fit.ell_hat * fit.ell_hat;
  for (int s1 = 0; s1 < L; ++s1)
    for (int s2 = 0; s2 < L; ++s2) {
      const double d = periodic_distance(s1, s2, L);
      fit.C = std::max(fit.C, std::abs(kernel(s1, s2)) * norm * std::exp(fit.c * d / fit.ell_hat));
    }
  return fit;
}

DerivativeFit fit_derivatives(const PropagatorKernel& kernel) {
  const int L = kernel.L();
  const double lh = ell_hat(kernel.xi(), L);
  const double gap = std::abs(1.0 - kernel.xi());
  const int steps[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  DerivativeFit fit;
  for (int s1 = 0; s1 < L; ++s1)
    for (int s2 = 0; s2 < L; ++s2) {
      const double d = periodic_distance(s1, s2, L);
      const double env1 = 1.0 / (d + 1.0) + 1.0 / (lh * lh * std::sqrt(gap));
      const double env2 = 1.0 / (d * d + 1.0) + 1.0 / (lh * lh);
      const cplx k0 = kernel(s1, s2);
      for (const auto& e : steps) {
        const cplx kp = kernel(s1 + e[0], s2 + e[1]);
        const cplx km = kernel(s1 - e[0], s2 - e[1]);
        fit.C1 = std::max(fit.C1, std::abs(k0 - kp) / env1);
        fit.C2 = std::max(fit.C2, std::abs(2.0 * k0 - kp - km) / env2);
      }
    }
  return fit;
}

}  // namespace bandlab

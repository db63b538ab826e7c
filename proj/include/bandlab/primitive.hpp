#pragma once

// Primitive loops K_{t,sigma,a}: closed forms for n <= 3, the cut-and-glue
// index algebra, RK4 evolution of the primitive equation, Ward identity and
// sum rule checks, and the tensor operators Theta_{t,sigma}, U_{s,t,sigma},
// P, Q_t and vartheta.
//
// Rank-n K values are stored translation-reduced:
// K_{(a_1..a_n)} = values[ flat(a_2 - a_1), ..., flat(a_n - a_1) ] with the
// last offset running fastest and flat(d) = d1*L + d2.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "bandlab/lattice.hpp"
#include "bandlab/model.hpp"
#include "bandlab/propagator.hpp"

namespace bandlab {

class PrimitiveLoop {
 public:
  PrimitiveLoop(BlockGeometry geom, SpectralParams params, std::string sigma, std::vector<cplx> values);

  const BlockGeometry& geometry() const { return geom_; }
  const SpectralParams& params() const { return params_; }
  const std::string& sigma() const { return sigma_; }
  std::size_t n() const { return sigma_.size(); }
  const std::vector<cplx>& values() const { return values_; }

  cplx at(const std::vector<BlockIndex>& a) const;
  /// Flat reduced index of a.
  std::size_t reduced_index(const std::vector<BlockIndex>& a) const;
  /// Blocks (0, d_2, ..., d_n) for a reduced index.
  std::vector<BlockIndex> blocks(std::size_t reduced) const;

 private:
  BlockGeometry geom_;
  SpectralParams params_;
  std::string sigma_;
  std::vector<cplx> values_;
};

/// (L^2)^(n-1).
std::size_t reduced_size(std::size_t n, const BlockGeometry& geom);

/// K_0 = W^(-2(n-1)) prod m(sigma_k) 1(a_1 = ... = a_n).
PrimitiveLoop k_initial(const std::string& sigma, const SpectralParams& params, const BlockGeometry& geom);

/// Closed form for n <= 3. Throws std::invalid_argument for n > 3.
cplx k_closed(const SpectralParams& params, const std::string& sigma, const std::vector<BlockIndex>& a,
              const BlockGeometry& geom);
/// Whole closed-form tensor for n <= 3.
PrimitiveLoop k_closed_tensor(const SpectralParams& params, const std::string& sigma, const BlockGeometry& geom);

struct GlueResult {
  std::string sigma;
  std::vector<BlockIndex> a;
  std::size_t slot;  ///< position of the summed index (always the last)
};

/// 1-based 1 <= k < l <= n. The summed block a_new takes the last slot.
/// Right: sigma' = (sigma_k..sigma_l), a' = (a_k..a_{l-1}, a_new).
/// Left:  sigma' = (sigma_l..sigma_n, sigma_1..sigma_k), a' = (a_l..a_n, a_1..a_{k-1}, a_new).
GlueResult glue_right(const std::string& sigma, const std::vector<BlockIndex>& a, std::size_t k, std::size_t l,
                      BlockIndex a_new);
GlueResult glue_left(const std::string& sigma, const std::vector<BlockIndex>& a, std::size_t k, std::size_t l,
                     BlockIndex a_new);

struct StepControl {
  int initial_steps = 8;
  int max_steps = 1 << 14;
  double tolerance = 1e-8;  ///< on max|K_N - K_2N| / max|K_2N|
};

class StepCollapseError : public std::runtime_error {
 public:
  StepCollapseError(const std::string& what, double residual) : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct EvolveResult {
  /// Every sign vector reachable from the target under cut-and-glue, evolved together.
  std::map<std::string, PrimitiveLoop> loops;
  int steps = 0;
  double refinement_residual = 0.0;

  const PrimitiveLoop& at(const std::string& sigma) const { return loops.at(sigma); }
};

/// Integrates the primitive equation from t = 0 to t_end with classical RK4,
/// doubling the step count until successive refinements agree.
/// Requires 2 <= n <= 4 and 0 <= t_end < 1.
EvolveResult k_evolve(const std::string& sigma, double E, double t_end, const BlockGeometry& geom,
                      StepControl control = {});

/// max over reduced (a_1..a_{n-1}) of
/// |sum_{a_n} K_{sigma,a} - (2i W^2 eta_t)^-1 (K_{sigma+} - K_{sigma-})|.
double k_ward_residual(const PrimitiveLoop& k, const PrimitiveLoop& k_plus, const PrimitiveLoop& k_minus);

/// |sum_{a_2..a_n} K| (W^2 eta_t)^(n-1).
double k_sum_rule_constant(const PrimitiveLoop& k);
/// max|K| M_t^(n-1).
double k_magnitude_constant(const PrimitiveLoop& k);

struct LoopDecayFit {
  double c = 0.0;  ///< minus the fitted slope of log max|K| against the block diameter
  double C = 0.0;  ///< smallest C with |K| <= C e^(-c diam)
};
/// Diameter of a is max_{ij} |a_i - a_j|_L.
LoopDecayFit fit_loop_decay(const PrimitiveLoop& k);

/// Dense rank-n tensor over (Z_L^2)^n with a_1 slowest.
class BlockTensor {
 public:
  BlockTensor(std::size_t rank, int L);
  BlockTensor(std::size_t rank, int L, std::vector<cplx> values);

  std::size_t rank() const { return rank_; }
  int L() const { return L_; }
  std::vector<cplx>& values() { return v_; }
  const std::vector<cplx>& values() const { return v_; }
  cplx& operator[](std::size_t i) { return v_[i]; }
  cplx operator[](std::size_t i) const { return v_[i]; }

  cplx at(const std::vector<BlockIndex>& a) const;
  double max_abs() const;

 private:
  std::size_t rank_;
  int L_;
  std::vector<cplx> v_;
};

/// (1-t)^(n-1) prod_{i>=2} (Theta_t)_{a_1 a_i}.
BlockTensor vartheta_profile(double t, std::size_t n, int L);

/// (P A)_{a_1} = sum_{a_2..a_n} A_a. Throws std::invalid_argument for rank < 2.
BlockField p_project(const BlockTensor& A);

/// Q_t A = A - (P A)_{a_1} vartheta_{t,a}.
BlockTensor q_sumzero(double t, const BlockTensor& A);

/// Applies one circulant kernel along axis i of A.
BlockTensor apply_along(const BlockTensor& A, std::size_t axis, const std::vector<cplx>& kernel);

/// Leg kernel (1 - s xi S)(1 - t xi S)^-1 = I - (s - t) xi Theta_{t xi} S.
std::vector<cplx> u_leg_kernel(double s, double t, cplx xi, int L);

/// U_{s,t,sigma} A with xi_i = m_i m_{i+1}, m_{n+1} = m_1, m_i = m(sigma_i) at energy E.
/// Throws std::invalid_argument when rank(A) != |sigma|.
BlockTensor u_apply(double s, double t, const std::string& sigma, double E, const BlockTensor& A);

/// Theta_{t,sigma} A = sum_i (xi_i / (1 - t xi_i S))_{a_i b_i} A_{a^(i)}.
BlockTensor theta_sigma_apply(double t, const std::string& sigma, double E, const BlockTensor& A);

}  // namespace bandlab

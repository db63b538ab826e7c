#pragma once

// G-loops L_{t,sigma,a} = tr prod_i G_t(sigma_i) E_{a_i}, the T-matrix, and
// the loop-level Ward identity.
//
// E_a is the diagonal matrix with entries W^-2 on the sites of block a.
// Signs are written as strings over {'+', '-'}; G(+) = G and G(-) = G^dagger.

#include <string>
#include <vector>

#include "bandlab/lattice.hpp"
#include "bandlab/model.hpp"
#include "bandlab/spectra.hpp"

namespace bandlab {

struct LoopSpec {
  std::string sigma;
  std::vector<BlockIndex> a;

  std::size_t n() const { return sigma.size(); }
};

/// Throws std::invalid_argument unless sigma is a nonempty string over {+,-}
/// of the same length as a.
void validate(const LoopSpec& spec, const BlockGeometry& geom);

/// m(sigma_i) per entry of sigma.
std::vector<cplx> sign_values(const std::string& sigma, cplx m);

struct LoopValue {
  cplx value;
  LoopSpec spec;
  cplx z;
};

/// Evaluates loops against one resolvent by contracting W^2 x W^2 block slices.
class LoopEvaluator {
 public:
  LoopEvaluator(const Resolvent& G, const BlockGeometry& geom);

  const BlockGeometry& geometry() const { return geom_; }
  cplx z() const { return G_.z(); }

  /// G(sign)[I_a, I_b].
  CMatrix slice(char sign, BlockIndex a, BlockIndex b) const;
  cplx loop(const LoopSpec& spec) const;

 private:
  const Resolvent& G_;
  BlockGeometry geom_;
  std::vector<std::vector<Eigen::Index>> sites_;
};

/// Builds G_t(+) = (sqrt(t) H - z_t)^-1 from the eigensystem and evaluates one loop.
LoopValue eval_loop(const EigenSystem& eig, const SpectralParams& params, const LoopSpec& spec,
                    const BlockGeometry& geom);

enum class TKind { plus_minus, plus_plus };

/// T_ab = tr G E_a G^dagger E_b (plus_minus) or tr G E_a G E_b (plus_plus),
/// indexed (flat(a), flat(b)).
CMatrix t_matrix(const Resolvent& G, const BlockGeometry& geom, TKind kind);

struct WardResidual {
  cplx lhs;        ///< sum over a_n of L_{sigma, a}
  cplx rhs;        ///< (2i W^2 eta)^-1 (L_{sigma+} - L_{sigma-})
  double abs = 0;  ///< |lhs - rhs|
  double rel = 0;  ///< abs / |L_{sigma+}|
};

/// sigma+ and sigma- replace sigma_1 by + and - and drop sigma_n.
std::string ward_sigma(const std::string& sigma, char first);

/// Requires sigma_1 = '+' and sigma_n = '-'; spec.a[n-1] is ignored.
WardResidual ward_residual(const LoopEvaluator& ev, const LoopSpec& spec);

}  // namespace bandlab

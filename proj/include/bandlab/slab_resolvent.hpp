#pragma once

// Selected entries of G = (s*H - z)^-1 for band matrices on the block torus
// without forming the full inverse.
//
// A slab is the set of blocks sharing a1. Slabs are coupled only to their two
// neighbours, and the coupling between neighbouring slabs is block diagonal
// over a2, so s*H - z is block cyclic tridiagonal. Slab 0 is eliminated by a
// Schur complement; the remaining open chain is handled by left/right
// connected sweeps.

#include <cstddef>
#include <vector>

#include "bandlab/lattice.hpp"
#include "bandlab/linalg.hpp"

namespace bandlab {

enum class Precision { f32, f64 };

struct SlabColumns {
  /// N x (W^2 L); rows in global site order.
  CMatrix G;
  /// Global site index of each column (slab-0 sites grouped by block).
  std::vector<std::size_t> sites;
};

/// Columns of G belonging to the sites of slab 0 (blocks with a1 = 0).
SlabColumns slab_zero_columns(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale,
                              Precision precision = Precision::f64);

/// Full diagonal of G in global site order.
CVector slab_diagonal(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale,
                      Precision precision = Precision::f64);

}  // namespace bandlab

#include "bandlab/lattice.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace bandlab {

BlockGeometry::BlockGeometry(int W, int L) : W_(W), L_(L) {
  if (W < 1) throw std::invalid_argument("band width W must be >= 1, got " + std::to_string(W));
  if (L < 3) throw std::invalid_argument("blocks per side L must be >= 3, got " + std::to_string(L));
}

std::size_t BlockGeometry::block_of_flat(std::size_t i) const {
  const auto s = static_cast<std::size_t>(side());
  const auto x1 = i / s;
  const auto x2 = i % s;
  return (x1 / W_) * L_ + x2 / W_;
}

int periodic_distance(int d1, int d2, int L) {
  d1 = wrap(d1, L);
  d2 = wrap(d2, L);
  return std::min(d1, L - d1) + std::min(d2, L - d2);
}

int periodic_distance(BlockIndex a, BlockIndex b, int L) {
  return periodic_distance(a.a1 - b.a1, a.a2 - b.a2, L);
}

BlockIndex block_of(SiteIndex x, const BlockGeometry& geom) {
  return {x.x1 / geom.W(), x.x2 / geom.W()};
}

std::vector<SiteIndex> block_sites(BlockIndex a, const BlockGeometry& geom) {
  const int W = geom.W();
  std::vector<SiteIndex> out;
  out.reserve(geom.block_size());
  for (int i = 0; i < W; ++i)
    for (int j = 0; j < W; ++j) out.push_back({a.a1 * W + i, a.a2 * W + j});
  return out;
}

std::vector<std::size_t> block_site_indices(BlockIndex a, const BlockGeometry& geom) {
  std::vector<std::size_t> out;
  out.reserve(geom.block_size());
  for (const auto& x : block_sites(a, geom)) out.push_back(geom.flat(x));
  return out;
}

std::vector<BlockIndex> stencil_neighbours(BlockIndex a, int L) {
  return {a,
          {wrap(a.a1 + 1, L), a.a2},
          {wrap(a.a1 - 1, L), a.a2},
          {a.a1, wrap(a.a2 + 1, L)},
          {a.a1, wrap(a.a2 - 1, L)}};
}

}  // namespace bandlab

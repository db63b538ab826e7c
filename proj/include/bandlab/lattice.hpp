#pragma once

// Torus geometry for the block lattice Z_L^2 and the site lattice Z_{WL}^2.
//
// Indexing is 0-based throughout. Block a = (a1, a2) covers the sites
// x = (x1, x2) with a1*W <= x1 < (a1+1)*W and a2*W <= x2 < (a2+1)*W.
// Sites are flattened row-major as x1*(W*L) + x2, blocks as a1*L + a2.
// With this flattening every "slab" of blocks sharing a1 occupies one
// contiguous index range of length W*W*L.

#include <cstddef>
#include <vector>

namespace bandlab {

struct BlockIndex {
  int a1 = 0;
  int a2 = 0;
  friend bool operator==(const BlockIndex&, const BlockIndex&) = default;
};

struct SiteIndex {
  int x1 = 0;
  int x2 = 0;
  friend bool operator==(const SiteIndex&, const SiteIndex&) = default;
};

class BlockGeometry {
 public:
  /// Throws std::invalid_argument unless W >= 1 and L >= 3.
  BlockGeometry(int W, int L);

  int W() const { return W_; }
  int L() const { return L_; }
  int side() const { return W_ * L_; }
  std::size_t N() const { return static_cast<std::size_t>(side()) * side(); }
  std::size_t block_count() const { return static_cast<std::size_t>(L_) * L_; }
  std::size_t block_size() const { return static_cast<std::size_t>(W_) * W_; }

  std::size_t flat(SiteIndex x) const {
    return static_cast<std::size_t>(x.x1) * side() + x.x2;
  }
  SiteIndex site(std::size_t i) const {
    return {static_cast<int>(i / side()), static_cast<int>(i % side())};
  }
  std::size_t flat(BlockIndex a) const {
    return static_cast<std::size_t>(a.a1) * L_ + a.a2;
  }
  BlockIndex block(std::size_t i) const {
    return {static_cast<int>(i / L_), static_cast<int>(i % L_)};
  }

  bool valid(SiteIndex x) const {
    return x.x1 >= 0 && x.x2 >= 0 && x.x1 < side() && x.x2 < side();
  }
  bool valid(BlockIndex a) const {
    return a.a1 >= 0 && a.a2 >= 0 && a.a1 < L_ && a.a2 < L_;
  }

  /// Flattened block index of the block containing flattened site i.
  std::size_t block_of_flat(std::size_t i) const;

  friend bool operator==(const BlockGeometry&, const BlockGeometry&) = default;

 private:
  int W_;
  int L_;
};

/// Reduce v into [0, L).
inline int wrap(int v, int L) {
  const int r = v % L;
  return r < 0 ? r + L : r;
}

/// Periodic L^1 distance of a coordinate offset on Z_L^2.
int periodic_distance(int d1, int d2, int L);
int periodic_distance(BlockIndex a, BlockIndex b, int L);

BlockIndex block_of(SiteIndex x, const BlockGeometry& geom);

/// The W^2 sites of block a in row-major order.
std::vector<SiteIndex> block_sites(BlockIndex a, const BlockGeometry& geom);

/// Same as block_sites, flattened.
std::vector<std::size_t> block_site_indices(BlockIndex a, const BlockGeometry& geom);

/// Blocks b with |a-b|_L <= 1 (a itself first, then the four neighbours).
/// For L >= 3 these are five distinct blocks.
std::vector<BlockIndex> stencil_neighbours(BlockIndex a, int L);

}  // namespace bandlab

#include <doctest.h>

#include "bandlab/sampler.hpp"
#include "bandlab/slab_resolvent.hpp"
#include "bandlab/spectra.hpp"

using namespace bandlab;

TEST_CASE("slab recursion reproduces the dense resolvent") {
  for (const auto& [W, L] : std::vector<std::pair<int, int>>{{1, 3}, {2, 3}, {2, 4}, {3, 5}}) {
    const BlockGeometry geom(W, L);
    const auto h = sample_band(VarianceProfile(geom), {17, static_cast<std::uint64_t>(W * 10 + L)});
    for (const double scale : {1.0, std::sqrt(0.5)}) {
      const cplx z(0.2, 0.07);
      const CMatrix G = shifted_inverse(h.H, scale, z);
      const double gmax = G.cwiseAbs().maxCoeff();

      const auto cols = slab_zero_columns(h.H, geom, z, scale);
      REQUIRE(cols.sites.size() == geom.block_size() * L);
      double dev = 0.0;
      for (std::size_t j = 0; j < cols.sites.size(); ++j)
        dev = std::max(dev, (cols.G.col(j) - G.col(cols.sites[j])).cwiseAbs().maxCoeff());
      CHECK(dev <= 1e-10 * gmax);

      const CVector d = slab_diagonal(h.H, geom, z, scale);
      CHECK((d - G.diagonal()).cwiseAbs().maxCoeff() <= 1e-10 * gmax);

      const CVector df = slab_diagonal(h.H, geom, z, scale, Precision::f32);
      CHECK((df - G.diagonal()).cwiseAbs().maxCoeff() <= 1e-3 * gmax);
    }
  }
}

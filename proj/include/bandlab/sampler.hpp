#pragma once

// Seeded Gaussian ensembles: the block band matrix with profile S, GUE, and
// the fixed-time marginal of the matrix OU flow started from a band sample.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "bandlab/linalg.hpp"
#include "bandlab/model.hpp"

namespace bandlab {

struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t index = 0;
  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

enum class Ensemble { band, gue, ou };

std::string ensemble_name(Ensemble e);

struct BandSample {
  std::optional<BlockGeometry> geom;  ///< empty for GUE draws of arbitrary size
  CMatrix H;
  SeedSpec seed;
  Ensemble ensemble = Ensemble::band;
  double ou_t = 0.0;

  std::size_t N() const { return static_cast<std::size_t>(H.rows()); }
};

/// H_xy = (g1 + i g2) sqrt(S_xy / 2) above the diagonal, H_xx = g sqrt(S_xx).
BandSample sample_band(const VarianceProfile& profile, SeedSpec seed);

/// Off-diagonal E|H_xy|^2 = 1/N, diagonal real with E H_xx^2 = 1/N.
/// Throws std::invalid_argument when N < 2.
BandSample sample_gue(std::size_t N, SeedSpec seed);

/// e^(-t/2) h0 + sqrt(1 - e^(-t)) X with X an independent GUE draw keyed on seed.
/// Throws std::invalid_argument when t < 0.
BandSample ou_interpolate(const BandSample& h0, double t, SeedSpec seed);

/// Binary dump: 8-byte magic "BLSAMP01", then uint64 W, L, N, master, index,
/// then the lower triangle (row i, columns 0..i) as (re, im) pairs of
/// little-endian IEEE doubles. W and L are 0 for samples without geometry.
void write_sample(const BandSample& sample, const std::filesystem::path& path);
BandSample read_sample(const std::filesystem::path& path);

}  // namespace bandlab

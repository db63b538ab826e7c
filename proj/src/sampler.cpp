#include "bandlab/sampler.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

namespace bandlab {

namespace {

enum StreamTag : std::uint32_t { kBandStream = 1, kGueStream = 2, kOuStream = 3 };

std::mt19937_64 make_engine(SeedSpec seed, StreamTag tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.master), static_cast<std::uint32_t>(seed.master >> 32),
                    static_cast<std::uint32_t>(seed.index), static_cast<std::uint32_t>(seed.index >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

BandSample gue_matrix(std::size_t N, SeedSpec seed, StreamTag tag) {
  if (N < 2) throw std::invalid_argument("GUE dimension must be >= 2");
  auto eng = make_engine(seed, tag);
  std::normal_distribution<double> gauss;
  const double sd_off = std::sqrt(0.5 / static_cast<double>(N));
  const double sd_diag = std::sqrt(1.0 / static_cast<double>(N));
  BandSample out;
  out.H = CMatrix::Zero(N, N);
  for (std::size_t x = 0; x < N; ++x) {
    out.H(x, x) = gauss(eng) * sd_diag;
    for (std::size_t y = x + 1; y < N; ++y) {
      const double re = gauss(eng), im = gauss(eng);
      const cplx v(re * sd_off, im * sd_off);
      out.H(x, y) = v;
      out.H(y, x) = std::conj(v);
    }
  }
  out.seed = seed;
  out.ensemble = Ensemble::gue;
  return out;
}

void put_u64(std::ofstream& os, std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ofstream& os, double d) { put_u64(os, std::bit_cast<std::uint64_t>(d)); }

std::uint64_t get_u64(std::ifstream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("truncated sample file");
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

constexpr std::array<char, 8> kMagic{'B', 'L', 'S', 'A', 'M', 'P', '0', '1'};

}  // namespace

std::string ensemble_name(Ensemble e) {
  switch (e) {
    case Ensemble::band: return "band";
    case Ensemble::gue: return "gue";
    case Ensemble::ou: return "ou";
  }
  return "unknown";
}

BandSample sample_band(const VarianceProfile& profile, SeedSpec seed) {
  const BlockGeometry& g = profile.geometry();
  const std::size_t N = g.N();
  auto eng = make_engine(seed, kBandStream);
  std::normal_distribution<double> gauss;
  const double s = 0.2 / static_cast<double>(g.block_size());
  const double sd_off = std::sqrt(s / 2.0), sd_diag = std::sqrt(s);

  BandSample out;
  out.geom = g;
  out.H = CMatrix::Zero(N, N);
  out.seed = seed;
  out.ensemble = Ensemble::band;

  std::vector<std::size_t> partners;
  for (std::size_t x = 0; x < N; ++x) {
    const BlockIndex a = block_of(g.site(x), g);
    partners.clear();
    for (const auto& b : stencil_neighbours(a, g.L()))
      for (std::size_t y : block_site_indices(b, g))
        if (y > x) partners.push_back(y);
    std::sort(partners.begin(), partners.end());
    out.H(x, x) = gauss(eng) * sd_diag;
    for (std::size_t y : partners) {
      const double re = gauss(eng), im = gauss(eng);
      const cplx v(re * sd_off, im * sd_off);
      out.H(x, y) = v;
      out.H(y, x) = std::conj(v);
    }
  }
  return out;
}

BandSample sample_gue(std::size_t N, SeedSpec seed) { return gue_matrix(N, seed, kGueStream); }

BandSample ou_interpolate(const BandSample& h0, double t, SeedSpec seed) {
  if (!(t >= 0.0)) throw std::invalid_argument("OU time must be >= 0");
  if (t == 0.0) return h0;
  BandSample noise = gue_matrix(h0.N(), seed, kOuStream);
  BandSample out;
  out.geom = h0.geom;
  out.H = std::exp(-0.5 * t) * h0.H + std::sqrt(-std::expm1(-t)) * noise.H;
  out.seed = seed;
  out.ensemble = Ensemble::ou;
  out.ou_t = t;
  return out;
}

void write_sample(const BandSample& sample, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put_u64(os, sample.geom ? static_cast<std::uint64_t>(sample.geom->W()) : 0);
  put_u64(os, sample.geom ? static_cast<std::uint64_t>(sample.geom->L()) : 0);
  put_u64(os, sample.N());
  put_u64(os, sample.seed.master);
  put_u64(os, sample.seed.index);
  const auto N = static_cast<Eigen::Index>(sample.N());
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      put_f64(os, sample.H(i, j).real());
      put_f64(os, sample.H(i, j).imag());
    }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

BandSample read_sample(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error(path.string() + " is not a sample dump");
  const auto W = get_u64(is), L = get_u64(is), N = get_u64(is);
  BandSample out;
  out.seed.master = get_u64(is);
  out.seed.index = get_u64(is);
  if (W > 0) {
    out.geom = BlockGeometry(static_cast<int>(W), static_cast<int>(L));
    if (out.geom->N() != N) throw std::runtime_error(path.string() + ": header N does not match W and L");
  } else {
    out.ensemble = Ensemble::gue;
  }
  out.H = CMatrix::Zero(N, N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double re = std::bit_cast<double>(get_u64(is));
      const double im = std::bit_cast<double>(get_u64(is));
      out.H(j, i) = cplx(re, -im);
      out.H(i, j) = cplx(re, im);
    }
  return out;
}

}  // namespace bandlab

#include "bandlab/loops.hpp"

#include <cmath>
#include <stdexcept>

namespace bandlab {

void validate(const LoopSpec& spec, const BlockGeometry& geom) {
  if (spec.sigma.empty()) throw std::invalid_argument("loop sign vector is empty");
  if (spec.sigma.size() != spec.a.size()) throw std::invalid_argument("loop sign and block vectors differ in length");
  for (char c : spec.sigma)
    if (c != '+' && c != '-') throw std::invalid_argument("loop signs must be '+' or '-'");
  for (const auto& a : spec.a)
    if (!geom.valid(a)) throw std::invalid_argument("loop block index out of range");
}

std::vector<cplx> sign_values(const std::string& sigma, cplx m) {
  std::vector<cplx> out;
  for (char c : sigma) out.push_back(c == '+' ? m : std::conj(m));
  return out;
}

LoopEvaluator::LoopEvaluator(const Resolvent& G, const BlockGeometry& geom) : G_(G), geom_(geom) {
  if (G.N() != geom.N()) throw std::invalid_argument("LoopEvaluator: dimension mismatch");
  sites_.resize(geom.block_count());
  for (std::size_t b = 0; b < geom.block_count(); ++b)
    for (std::size_t x : block_site_indices(geom.block(b), geom)) sites_[b].push_back(static_cast<Eigen::Index>(x));
}

CMatrix LoopEvaluator::slice(char sign, BlockIndex a, BlockIndex b) const {
  const auto& ra = sites_[geom_.flat(a)];
  const auto& rb = sites_[geom_.flat(b)];
  const CMatrix& g = G_.matrix();
  const auto w2 = static_cast<Eigen::Index>(ra.size());
  CMatrix out(w2, w2);
  if (sign == '+') {
    for (Eigen::Index j = 0; j < w2; ++j)
      for (Eigen::Index i = 0; i < w2; ++i) out(i, j) = g(ra[i], rb[j]);
  } else {
    for (Eigen::Index j = 0; j < w2; ++j)
      for (Eigen::Index i = 0; i < w2; ++i) out(i, j) = std::conj(g(rb[j], ra[i]));
  }
  return out;
}

cplx LoopEvaluator::loop(const LoopSpec& spec) const {
  validate(spec, geom_);
  const std::size_t n = spec.n();
  // L = W^-2n tr(B_1 ... B_n) with B_i = G(sigma_i)[I_{a_{i-1}}, I_{a_i}] and a_0 = a_n.
  CMatrix acc = slice(spec.sigma[0], spec.a[n - 1], spec.a[0]);
  for (std::size_t i = 1; i < n; ++i) acc = acc * slice(spec.sigma[i], spec.a[i - 1], spec.a[i]);
  const double w2 = static_cast<double>(geom_.block_size());
  return acc.trace() / std::pow(w2, static_cast<double>(n));
}

LoopValue eval_loop(const EigenSystem& eig, const SpectralParams& params, const LoopSpec& spec,
                    const BlockGeometry& geom) {
  const Resolvent G = Resolvent::from_eigensystem(eig, params.z_t, std::sqrt(params.t));
  LoopEvaluator ev(G, geom);
  return {ev.loop(spec), spec, params.z_t};
}

CMatrix t_matrix(const Resolvent& G, const BlockGeometry& geom, TKind kind) {
  if (G.N() != geom.N()) throw std::invalid_argument("t_matrix: dimension mismatch");
  const auto nb = static_cast<Eigen::Index>(geom.block_count());
  const auto N = static_cast<Eigen::Index>(geom.N());
  std::vector<Eigen::Index> blk(N);
  for (Eigen::Index x = 0; x < N; ++x) blk[x] = static_cast<Eigen::Index>(geom.block_of_flat(x));
  const CMatrix& g = G.matrix();
  CMatrix T = CMatrix::Zero(nb, nb);
  // T_ab = W^-4 sum_{x in a, y in b} G_yx conj(G_yx) or G_yx G_xy.
  for (Eigen::Index x = 0; x < N; ++x)
    for (Eigen::Index y = 0; y < N; ++y) {
      const cplx gyx = g(y, x);
      T(blk[x], blk[y]) += kind == TKind::plus_minus ? cplx(std::norm(gyx), 0.0) : gyx * g(x, y);
    }
  const double w2 = static_cast<double>(geom.block_size());
  return T / (w2 * w2);
}

std::string ward_sigma(const std::string& sigma, char first) {
  std::string out = sigma.substr(0, sigma.size() - 1);
  out[0] = first;
  return out;
}

WardResidual ward_residual(const LoopEvaluator& ev, const LoopSpec& spec) {
  const std::size_t n = spec.n();
  if (n < 2 || spec.sigma.front() != '+' || spec.sigma.back() != '-')
    throw std::invalid_argument("ward_residual requires n >= 2, sigma_1 = '+' and sigma_n = '-'");
  const BlockGeometry& geom = ev.geometry();
  WardResidual r;
  LoopSpec s = spec;
  for (std::size_t b = 0; b < geom.block_count(); ++b) {
    s.a[n - 1] = geom.block(b);
    r.lhs += ev.loop(s);
  }
  LoopSpec plus{ward_sigma(spec.sigma, '+'), {spec.a.begin(), spec.a.end() - 1}};
  LoopSpec minus{ward_sigma(spec.sigma, '-'), plus.a};
  const cplx lp = ev.loop(plus), lm = ev.loop(minus);
  const double w2 = static_cast<double>(geom.block_size());
  r.rhs = (lp - lm) / (cplx(0.0, 2.0) * w2 * ev.z().imag());
  r.abs = std::abs(r.lhs - r.rhs);
  r.rel = r.abs / std::abs(lp);
  return r;
}

}  // namespace bandlab

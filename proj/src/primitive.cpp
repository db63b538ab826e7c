#include "bandlab/primitive.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace bandlab {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= b;
  return r;
}

BlockIndex diff(BlockIndex a, BlockIndex b, int L) { return {wrap(a.a1 - b.a1, L), wrap(a.a2 - b.a2, L)}; }

std::size_t flat_block(BlockIndex a, int L) { return static_cast<std::size_t>(a.a1) * L + a.a2; }

void check_sigma(const std::string& sigma) {
  if (sigma.empty()) throw std::invalid_argument("sign vector is empty");
  for (char c : sigma)
    if (c != '+' && c != '-') throw std::invalid_argument("signs must be '+' or '-'");
}

cplx sign_product(const std::string& sigma, cplx m) {
  cplx p = 1.0;
  for (char c : sigma) p *= c == '+' ? m : std::conj(m);
  return p;
}

cplx m_of(char c, cplx m) { return c == '+' ? m : std::conj(m); }

std::string ward_sigma_of(const std::string& sigma, char first) {
  std::string out = sigma.substr(0, sigma.size() - 1);
  out[0] = first;
  return out;
}

}  // namespace

PrimitiveLoop::PrimitiveLoop(BlockGeometry geom, SpectralParams params, std::string sigma, std::vector<cplx> values)
    : geom_(geom), params_(params), sigma_(std::move(sigma)), values_(std::move(values)) {
  check_sigma(sigma_);
  if (values_.size() != reduced_size(sigma_.size(), geom_))
    throw std::invalid_argument("primitive loop tensor has the wrong size");
}

std::size_t reduced_size(std::size_t n, const BlockGeometry& geom) {
  return ipow(geom.block_count(), n - 1);
}

std::size_t PrimitiveLoop::reduced_index(const std::vector<BlockIndex>& a) const {
  if (a.size() != n()) throw std::invalid_argument("block vector length does not match the loop rank");
  const int L = geom_.L();
  std::size_t idx = 0;
  for (std::size_t i = 1; i < a.size(); ++i) idx = idx * geom_.block_count() + flat_block(diff(a[i], a[0], L), L);
  return idx;
}

std::vector<BlockIndex> PrimitiveLoop::blocks(std::size_t reduced) const {
  std::vector<BlockIndex> a(n());
  for (std::size_t i = n(); i-- > 1;) {
    a[i] = geom_.block(reduced % geom_.block_count());
    reduced /= geom_.block_count();
  }
  return a;
}

cplx PrimitiveLoop::at(const std::vector<BlockIndex>& a) const { return values_[reduced_index(a)]; }

PrimitiveLoop k_initial(const std::string& sigma, const SpectralParams& params, const BlockGeometry& geom) {
  check_sigma(sigma);
  std::vector<cplx> v(reduced_size(sigma.size(), geom), 0.0);
  const double w2 = static_cast<double>(geom.block_size());
  v[0] = std::pow(w2, -static_cast<double>(sigma.size() - 1)) * sign_product(sigma, params.m_E);
  return PrimitiveLoop(geom, params, sigma, std::move(v));
}

PrimitiveLoop k_closed_tensor(const SpectralParams& p, const std::string& sigma, const BlockGeometry& geom) {
  check_sigma(sigma);
  const std::size_t n = sigma.size();
  if (n > 3) throw std::invalid_argument("closed form primitive loops exist only for n <= 3");
  const int L = geom.L();
  const double w2 = static_cast<double>(geom.block_size());
  const cplx m = p.m_E;
  std::vector<cplx> v(reduced_size(n, geom));
  if (n == 1) {
    v[0] = m_of(sigma[0], m);
  } else if (n == 2) {
    const cplx xi = m_of(sigma[0], m) * m_of(sigma[1], m);
    const auto th = theta_kernel(p.t * xi, L);
    for (std::size_t d = 0; d < v.size(); ++d) v[d] = xi / w2 * th.values()[d];
  } else {
    const cplx m1 = m_of(sigma[0], m), m2 = m_of(sigma[1], m), m3 = m_of(sigma[2], m);
    const auto t12 = theta_kernel(p.t * m1 * m2, L);
    const auto t23 = theta_kernel(p.t * m2 * m3, L);
    const auto t31 = theta_kernel(p.t * m3 * m1, L);
    const cplx pref = m1 * m2 * m3 / (w2 * w2);
    const std::size_t nb = geom.block_count();
    for (std::size_t d2 = 0; d2 < nb; ++d2)
      for (std::size_t d3 = 0; d3 < nb; ++d3) {
        const BlockIndex a2 = geom.block(d2), a3 = geom.block(d3);
        cplx acc = 0.0;
        for (std::size_t bb = 0; bb < nb; ++bb) {
          const BlockIndex b = geom.block(bb);
          acc += t12(-b.a1, -b.a2) * t23(a2.a1 - b.a1, a2.a2 - b.a2) * t31(a3.a1 - b.a1, a3.a2 - b.a2);
        }
        v[d2 * nb + d3] = pref * acc;
      }
  }
  return PrimitiveLoop(geom, p, sigma, std::move(v));
}

cplx k_closed(const SpectralParams& params, const std::string& sigma, const std::vector<BlockIndex>& a,
              const BlockGeometry& geom) {
  if (sigma.size() > 3) throw std::invalid_argument("closed form primitive loops exist only for n <= 3");
  return k_closed_tensor(params, sigma, geom).at(a);
}

GlueResult glue_right(const std::string& sigma, const std::vector<BlockIndex>& a, std::size_t k, std::size_t l,
                      BlockIndex a_new) {
  const std::size_t n = sigma.size();
  if (a.size() != n) throw std::invalid_argument("glue: sign and block vectors differ in length");
  if (!(1 <= k && k < l && l <= n)) throw std::invalid_argument("glue requires 1 <= k < l <= n");
  GlueResult r;
  r.sigma = sigma.substr(k - 1, l - k + 1);
  r.a.assign(a.begin() + (k - 1), a.begin() + (l - 1));
  r.a.push_back(a_new);
  r.slot = r.a.size() - 1;
  return r;
}

GlueResult glue_left(const std::string& sigma, const std::vector<BlockIndex>& a, std::size_t k, std::size_t l,
                     BlockIndex a_new) {
  const std::size_t n = sigma.size();
  if (a.size() != n) throw std::invalid_argument("glue: sign and block vectors differ in length");
  if (!(1 <= k && k < l && l <= n)) throw std::invalid_argument("glue requires 1 <= k < l <= n");
  GlueResult r;
  r.sigma = sigma.substr(l - 1) + sigma.substr(0, k);
  r.a.assign(a.begin() + (l - 1), a.end());
  r.a.insert(r.a.end(), a.begin(), a.begin() + (k - 1));
  r.a.push_back(a_new);
  r.slot = r.a.size() - 1;
  return r;
}

namespace {

struct GlueTerm {
  std::size_t left, right;
  std::size_t k, l;
};

struct EntryTerm {
  std::size_t base_left, base_right, shift;
};

struct Component {
  explicit Component(std::string s) : sigma(std::move(s)) {}
  std::string sigma;
  std::size_t size = 0;
  std::vector<GlueTerm> terms;
  std::vector<EntryTerm> entries;  // size * terms.size(), entry-major
};

class PrimitiveSystem {
 public:
  PrimitiveSystem(const std::string& target, const BlockGeometry& geom) : geom_(geom) {
    const int L = geom.L();
    nb_ = geom.block_count();
    add_.resize(nb_ * nb_);
    for (std::size_t u = 0; u < nb_; ++u)
      for (std::size_t v = 0; v < nb_; ++v) {
        const BlockIndex a = geom.block(u), b = geom.block(v);
        add_[u * nb_ + v] = flat_block({wrap(a.a1 + b.a1, L), wrap(a.a2 + b.a2, L)}, L);
      }
    for (std::size_t u = 0; u < nb_; ++u) {
      const BlockIndex a = geom.block(u);
      for (const auto& b : stencil_neighbours(a, L)) stencil_.push_back(flat_block(b, L));
    }

    std::map<std::string, std::size_t> id;
    std::deque<std::string> queue{target};
    id[target] = 0;
    comps_.emplace_back(target);
    while (!queue.empty()) {
      const std::string s = queue.front();
      queue.pop_front();
      const std::size_t c = id.at(s);
      const std::size_t r = s.size();
      std::vector<BlockIndex> dummy(r);
      for (std::size_t k = 1; k <= r; ++k)
        for (std::size_t l = k + 1; l <= r; ++l) {
          const std::string sl = glue_left(s, dummy, k, l, {}).sigma;
          const std::string sr = glue_right(s, dummy, k, l, {}).sigma;
          for (const auto& x : {sl, sr})
            if (!id.count(x)) {
              id[x] = comps_.size();
              comps_.emplace_back(x);
              queue.push_back(x);
            }
          comps_[c].terms.push_back({id.at(sl), id.at(sr), k, l});
        }
    }
    for (auto& comp : comps_) build_entries(comp);
  }

  const std::vector<Component>& components() const { return comps_; }

  using State = std::vector<std::vector<cplx>>;

  void rhs(const State& K, State& dK) const {
    const double w2 = static_cast<double>(geom_.block_size());
    State smooth(comps_.size());
    for (std::size_t c = 0; c < comps_.size(); ++c) smooth[c] = smooth_last(K[c]);
    for (std::size_t c = 0; c < comps_.size(); ++c) {
      const Component& comp = comps_[c];
      dK[c].assign(comp.size, 0.0);
      const std::size_t nt = comp.terms.size();
      for (std::size_t e = 0; e < comp.size; ++e) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
          const EntryTerm& et = comp.entries[e * nt + j];
          const cplx* kl = K[comp.terms[j].left].data() + et.base_left;
          const cplx* rt = smooth[comp.terms[j].right].data() + et.base_right;
          const std::size_t* shifted = add_.data() + et.shift * nb_;
          for (std::size_t u = 0; u < nb_; ++u) acc += kl[u] * rt[shifted[u]];
        }
        dK[c][e] = w2 * acc;
      }
    }
  }

 private:
  // Sum over the stencil of the last reduced index: sum_b S_{alpha b} K(..., b).
  std::vector<cplx> smooth_last(const std::vector<cplx>& v) const {
    std::vector<cplx> out(v.size());
    for (std::size_t base = 0; base < v.size(); base += nb_)
      for (std::size_t u = 0; u < nb_; ++u) {
        cplx s = 0.0;
        for (std::size_t q = 0; q < 5; ++q) s += v[base + stencil_[u * 5 + q]];
        out[base + u] = 0.2 * s;
      }
    return out;
  }

  std::size_t encode(const std::vector<BlockIndex>& seq, BlockIndex ref) const {
    std::size_t idx = 0;
    for (const auto& b : seq) idx = idx * nb_ + flat_block(diff(b, ref, geom_.L()), geom_.L());
    return idx;
  }

  void build_entries(Component& comp) {
    const std::size_t r = comp.sigma.size();
    comp.size = reduced_size(r, geom_);
    comp.entries.reserve(comp.size * comp.terms.size());
    std::vector<BlockIndex> a(r);
    for (std::size_t e = 0; e < comp.size; ++e) {
      std::size_t rem = e;
      for (std::size_t i = r; i-- > 1;) {
        a[i] = geom_.block(rem % nb_);
        rem /= nb_;
      }
      a[0] = {0, 0};
      for (const auto& term : comp.terms) {
        const std::size_t k = term.k, l = term.l;
        // Right loop (a_k, ..., a_{l-1}, b) reduced against a_k.
        const std::vector<BlockIndex> pr(a.begin() + k, a.begin() + (l - 1));
        // Left loop (a_l, ..., a_n, a_1, ..., a_{k-1}, alpha) reduced against a_l.
        std::vector<BlockIndex> pl(a.begin() + l, a.end());
        pl.insert(pl.end(), a.begin(), a.begin() + (k - 1));
        const BlockIndex ak = a[k - 1], al = a[l - 1];
        comp.entries.push_back({encode(pl, al) * nb_, encode(pr, ak) * nb_,
                                flat_block(diff(al, ak, geom_.L()), geom_.L())});
      }
    }
  }

  BlockGeometry geom_;
  std::size_t nb_ = 0;
  std::vector<std::size_t> add_;
  std::vector<std::size_t> stencil_;
  std::vector<Component> comps_;
};

PrimitiveSystem::State integrate(const PrimitiveSystem& sys, const PrimitiveSystem::State& K0, double t_end,
                                 int steps) {
  using State = PrimitiveSystem::State;
  const double h = t_end / steps;
  State K = K0, k1(K.size()), k2(K.size()), k3(K.size()), k4(K.size()), tmp(K.size());
  auto axpy = [](const State& x, const State& d, double s, State& out) {
    for (std::size_t c = 0; c < x.size(); ++c) {
      out[c].resize(x[c].size());
      for (std::size_t i = 0; i < x[c].size(); ++i) out[c][i] = x[c][i] + s * d[c][i];
    }
  };
  for (int st = 0; st < steps; ++st) {
    sys.rhs(K, k1);
    axpy(K, k1, 0.5 * h, tmp);
    sys.rhs(tmp, k2);
    axpy(K, k2, 0.5 * h, tmp);
    sys.rhs(tmp, k3);
    axpy(K, k3, h, tmp);
    sys.rhs(tmp, k4);
    for (std::size_t c = 0; c < K.size(); ++c)
      for (std::size_t i = 0; i < K[c].size(); ++i)
        K[c][i] += h / 6.0 * (k1[c][i] + 2.0 * k2[c][i] + 2.0 * k3[c][i] + k4[c][i]);
  }
  return K;
}

double refinement_gap(const PrimitiveSystem::State& coarse, const PrimitiveSystem::State& fine) {
  double worst = 0.0;
  for (std::size_t c = 0; c < fine.size(); ++c) {
    double dmax = 0.0, vmax = 0.0;
    for (std::size_t i = 0; i < fine[c].size(); ++i) {
      dmax = std::max(dmax, std::abs(fine[c][i] - coarse[c][i]));
      vmax = std::max(vmax, std::abs(fine[c][i]));
    }
    worst = std::max(worst, vmax > 0.0 ? dmax / vmax : dmax);
  }
  return worst;
}

}  // namespace

EvolveResult k_evolve(const std::string& sigma, double E, double t_end, const BlockGeometry& geom,
                      StepControl control) {
  check_sigma(sigma);
  if (sigma.size() < 2 || sigma.size() > 4) throw std::invalid_argument("k_evolve supports 2 <= n <= 4");
  if (!(t_end >= 0.0 && t_end < 1.0)) throw std::domain_error("k_evolve requires 0 <= t_end < 1");
  const SpectralParams p0 = spectral_params(E, 0.0);
  const SpectralParams p_end = spectral_params(E, t_end);

  PrimitiveSystem sys(sigma, geom);
  PrimitiveSystem::State K0;
  for (const auto& comp : sys.components()) K0.push_back(k_initial(comp.sigma, p0, geom).values());

  EvolveResult res;
  PrimitiveSystem::State finalK = K0;
  if (t_end > 0.0) {
    int steps = std::max(1, control.initial_steps);
    PrimitiveSystem::State coarse = integrate(sys, K0, t_end, steps);
    double gap = 0.0;
    while (true) {
      if (2 * steps > control.max_steps) {
        std::ostringstream msg;
        msg << "k_evolve: step refinement did not reach " << control.tolerance << " within " << control.max_steps
            << " steps (last residual " << gap << ")";
        throw StepCollapseError(msg.str(), gap);
      }
      PrimitiveSystem::State fine = integrate(sys, K0, t_end, 2 * steps);
      gap = refinement_gap(coarse, fine);
      steps *= 2;
      coarse = std::move(fine);
      if (gap <= control.tolerance) break;
    }
    finalK = std::move(coarse);
    res.steps = steps;
    res.refinement_residual = gap;
  }
  for (std::size_t c = 0; c < sys.components().size(); ++c) {
    const auto& s = sys.components()[c].sigma;
    res.loops.emplace(s, PrimitiveLoop(geom, p_end, s, std::move(finalK[c])));
  }
  return res;
}

double k_ward_residual(const PrimitiveLoop& k, const PrimitiveLoop& kp, const PrimitiveLoop& km) {
  const std::size_t n = k.n();
  if (n < 2 || k.sigma().front() != '+' || k.sigma().back() != '-')
    throw std::invalid_argument("k_ward_residual requires sigma_1 = '+' and sigma_n = '-'");
  if (kp.sigma() != ward_sigma_of(k.sigma(), '+') || km.sigma() != ward_sigma_of(k.sigma(), '-'))
    throw std::invalid_argument("k_ward_residual: companion loops have the wrong sign vectors");
  if (!(kp.geometry() == k.geometry()) || !(km.geometry() == k.geometry()) || kp.params().t != k.params().t ||
      km.params().t != k.params().t || kp.params().E != k.params().E || km.params().E != k.params().E)
    throw std::invalid_argument("k_ward_residual: loops differ in t, E or geometry");
  const std::size_t nb = k.geometry().block_count();
  const double w2 = static_cast<double>(k.geometry().block_size());
  const cplx denom = cplx(0.0, 2.0) * w2 * k.params().eta_t;
  double worst = 0.0;
  for (std::size_t i = 0; i < kp.values().size(); ++i) {
    cplx lhs = 0.0;
    for (std::size_t u = 0; u < nb; ++u) lhs += k.values()[i * nb + u];
    const cplx rhs = (kp.values()[i] - km.values()[i]) / denom;
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return worst;
}

double k_sum_rule_constant(const PrimitiveLoop& k) {
  cplx s = 0.0;
  for (const auto& v : k.values()) s += v;
  const double w2 = static_cast<double>(k.geometry().block_size());
  return std::abs(s) * std::pow(w2 * k.params().eta_t, static_cast<double>(k.n() - 1));
}

double k_magnitude_constant(const PrimitiveLoop& k) {
  const FlowPoint fp = flow_point(k.params().E, k.params().t, k.geometry());
  double mx = 0.0;
  for (const auto& v : k.values()) mx = std::max(mx, std::abs(v));
  return mx * std::pow(fp.scale.M_t, static_cast<double>(k.n() - 1));
}

LoopDecayFit fit_loop_decay(const PrimitiveLoop& k) {
  const int L = k.geometry().L();
  std::vector<double> peak(2 * L + 1, 0.0);
  std::vector<int> diam(k.values().size());
  for (std::size_t i = 0; i < k.values().size(); ++i) {
    const auto a = k.blocks(i);
    int d = 0;
    for (std::size_t p = 0; p < a.size(); ++p)
      for (std::size_t q = p + 1; q < a.size(); ++q) d = std::max(d, periodic_distance(a[p], a[q], L));
    diam[i] = d;
    peak[d] = std::max(peak[d], std::abs(k.values()[i]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t d = 0; d < peak.size(); ++d) {
    if (!(peak[d] > 0.0)) continue;
    const double x = static_cast<double>(d), y = std::log(peak[d]);
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++n;
  }
  LoopDecayFit fit;
  if (n >= 2) fit.c = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
  for (std::size_t i = 0; i < k.values().size(); ++i)
    fit.C = std::max(fit.C, std::abs(k.values()[i]) * std::exp(fit.c * diam[i]));
  return fit;
}

BlockTensor::BlockTensor(std::size_t rank, int L)
    : rank_(rank), L_(L), v_(ipow(static_cast<std::size_t>(L) * L, rank), 0.0) {}

BlockTensor::BlockTensor(std::size_t rank, int L, std::vector<cplx> values)
    : rank_(rank), L_(L), v_(std::move(values)) {
  if (v_.size() != ipow(static_cast<std::size_t>(L) * L, rank))
    throw std::invalid_argument("block tensor has the wrong number of values");
}

cplx BlockTensor::at(const std::vector<BlockIndex>& a) const {
  if (a.size() != rank_) throw std::invalid_argument("block tensor index has the wrong rank");
  std::size_t idx = 0;
  for (const auto& b : a) idx = idx * L_ * L_ + flat_block({wrap(b.a1, L_), wrap(b.a2, L_)}, L_);
  return v_[idx];
}

double BlockTensor::max_abs() const {
  double m = 0.0;
  for (const auto& v : v_) m = std::max(m, std::abs(v));
  return m;
}

BlockTensor vartheta_profile(double t, std::size_t n, int L) {
  if (!(t >= 0.0 && t < 1.0)) throw std::domain_error("vartheta_profile requires 0 <= t < 1");
  if (n < 1) throw std::invalid_argument("vartheta_profile requires n >= 1");
  const auto th = theta_kernel(t, L);
  const std::size_t nb = static_cast<std::size_t>(L) * L;
  BlockTensor out(n, L);
  const double pref = std::pow(1.0 - t, static_cast<double>(n - 1));
  std::vector<std::size_t> digits(n);
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    std::size_t rem = i;
    for (std::size_t j = n; j-- > 0;) {
      digits[j] = rem % nb;
      rem /= nb;
    }
    const int a1 = static_cast<int>(digits[0] / L), a2 = static_cast<int>(digits[0] % L);
    cplx v = pref;
    for (std::size_t j = 1; j < n; ++j)
      v *= th(static_cast<int>(digits[j] / L) - a1, static_cast<int>(digits[j] % L) - a2);
    out[i] = v;
  }
  return out;
}

BlockField p_project(const BlockTensor& A) {
  if (A.rank() < 2) throw std::invalid_argument("p_project requires rank >= 2");
  const std::size_t nb = static_cast<std::size_t>(A.L()) * A.L();
  const std::size_t inner = A.values().size() / nb;
  BlockField out(nb, 0.0);
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t j = 0; j < inner; ++j) out[a] += A[a * inner + j];
  return out;
}

BlockTensor q_sumzero(double t, const BlockTensor& A) {
  const BlockField pa = p_project(A);
  const BlockTensor th = vartheta_profile(t, A.rank(), A.L());
  const std::size_t nb = pa.size();
  const std::size_t inner = A.values().size() / nb;
  BlockTensor out = A;
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t j = 0; j < inner; ++j) out[a * inner + j] -= pa[a] * th[a * inner + j];
  return out;
}

BlockTensor apply_along(const BlockTensor& A, std::size_t axis, const std::vector<cplx>& kernel) {
  const int L = A.L();
  const std::size_t nb = static_cast<std::size_t>(L) * L;
  if (axis >= A.rank()) throw std::invalid_argument("apply_along: axis out of range");
  if (kernel.size() != nb) throw std::invalid_argument("apply_along: kernel size mismatch");
  const std::size_t stride = ipow(nb, A.rank() - 1 - axis);
  const std::size_t outer = A.values().size() / (stride * nb);
  BlockTensor out(A.rank(), L);
  std::vector<std::size_t> diffidx(nb * nb);
  for (std::size_t a = 0; a < nb; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      diffidx[a * nb + b] = flat_block(
          {wrap(static_cast<int>(a / L) - static_cast<int>(b / L), L),
           wrap(static_cast<int>(a % L) - static_cast<int>(b % L), L)},
          L);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < stride; ++in) {
      const std::size_t base = o * stride * nb + in;
      for (std::size_t a = 0; a < nb; ++a) {
        cplx acc = 0.0;
        for (std::size_t b = 0; b < nb; ++b) acc += kernel[diffidx[a * nb + b]] * A[base + b * stride];
        out[base + a * stride] = acc;
      }
    }
  return out;
}

std::vector<cplx> u_leg_kernel(double s, double t, cplx xi, int L) {
  const auto th = theta_kernel(t * xi, L);
  BlockField k = stencil_apply(th.values(), L);
  for (auto& v : k) v *= -(s - t) * xi;
  k[0] += 1.0;
  return k;
}

namespace {

std::vector<cplx> leg_xis(const std::string& sigma, double E) {
  check_sigma(sigma);
  const cplx m = boundary_m(E);
  std::vector<cplx> xi;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    xi.push_back(m_of(sigma[i], m) * m_of(sigma[(i + 1) % sigma.size()], m));
  return xi;
}

}  // namespace

BlockTensor u_apply(double s, double t, const std::string& sigma, double E, const BlockTensor& A) {
  if (A.rank() != sigma.size()) throw std::invalid_argument("u_apply: tensor rank differs from |sigma|");
  if (!(0.0 <= s && s <= t && t < 1.0)) throw std::domain_error("u_apply requires 0 <= s <= t < 1");
  const auto xi = leg_xis(sigma, E);
  BlockTensor out = A;
  for (std::size_t i = 0; i < xi.size(); ++i) out = apply_along(out, i, u_leg_kernel(s, t, xi[i], A.L()));
  return out;
}

BlockTensor theta_sigma_apply(double t, const std::string& sigma, double E, const BlockTensor& A) {
  if (A.rank() != sigma.size()) throw std::invalid_argument("theta_sigma_apply: tensor rank differs from |sigma|");
  const auto xi = leg_xis(sigma, E);
  BlockTensor out(A.rank(), A.L());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    auto k = theta_kernel(t * xi[i], A.L()).values();
    for (auto& v : k) v *= xi[i];
    const BlockTensor term = apply_along(A, i, k);
    for (std::size_t j = 0; j < out.values().size(); ++j) out[j] += term[j];
  }
  return out;
}

}  // namespace bandlab

#include "bandlab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "bandlab/loops.hpp"
#include "bandlab/model.hpp"
#include "bandlab/primitive.hpp"
#include "bandlab/propagator.hpp"
#include "bandlab/sampler.hpp"
#include "bandlab/slab_resolvent.hpp"
#include "bandlab/spectra.hpp"

namespace bandlab {

namespace {

using json = nlohmann::ordered_json;

constexpr std::uint64_t kPoissonTag = 4;

/// Welford accumulator.
struct Running {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double se() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0; }
};

struct RunningC {
  Running re, im;
  void add(cplx z) {
    re.add(z.real());
    im.add(z.imag());
  }
  cplx mean() const { return {re.mean, im.mean}; }
  double se() const { return std::hypot(re.se(), im.se()); }
};

Aggregate info(std::string name, double value, double se = 0.0, std::string note = {}) {
  Aggregate a;
  a.name = std::move(name);
  a.value = value;
  a.se = se;
  a.note = std::move(note);
  return a;
}

Aggregate check(std::string name, double value, double se, double threshold, Comparison cmp, std::string note = {}) {
  Aggregate a = info(std::move(name), value, se, std::move(note));
  a.threshold = threshold;
  a.cmp = cmp;
  switch (cmp) {
    case Comparison::le: a.pass = value <= threshold + 3.0 * se; break;
    case Comparison::ge: a.pass = value >= threshold + 3.0 * se; break;
    case Comparison::lt_raw: a.pass = value < threshold; break;
    case Comparison::ge_raw: a.pass = value >= threshold; break;
    case Comparison::none: break;
  }
  if (!std::isfinite(value)) a.pass = false;
  return a;
}

/// Runs produce(i) for i < n on `workers` threads and hands the results to
/// consume(i, value) on the calling thread in index order. Exceptions from
/// produce are recorded as failures and the sample is skipped.
template <class T, class Produce, class Consume>
void for_each_sample(std::size_t n, unsigned workers, Produce produce, Consume consume,
                     std::vector<SampleFailure>& failures) {
  struct Outcome {
    std::optional<T> value;
    std::string error;
  };
  auto run_one = [&](std::size_t i) {
    Outcome o;
    try {
      o.value.emplace(produce(i));
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    return o;
  };
  auto deliver = [&](std::size_t i, Outcome& o) {
    if (o.value)
      consume(i, *o.value);
    else
      failures.push_back({i, o.error});
  };

  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      Outcome o = run_one(i);
      deliver(i, o);
    }
    return;
  }

  const std::size_t lookahead = 2 * static_cast<std::size_t>(workers);
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, Outcome> ready;
  std::size_t consumed = 0;
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return i < consumed + lookahead; });
      }
      Outcome o = run_one(i);
      {
        std::lock_guard lock(mu);
        ready.emplace(i, std::move(o));
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  for (unsigned w = 0; w < count; ++w) pool.emplace_back(work);
  for (std::size_t i = 0; i < n; ++i) {
    Outcome o;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return ready.count(i) > 0; });
      o = std::move(ready.at(i));
      ready.erase(i);
    }
    deliver(i, o);
    {
      std::lock_guard lock(mu);
      consumed = i + 1;
    }
    cv.notify_all();
  }
  for (auto& th : pool) th.join();
}

SeedSpec seed_of(const ExperimentConfig& c, std::size_t i) { return {c.seed, static_cast<std::uint64_t>(i)}; }

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

std::int64_t flat_block(const BlockGeometry& g, BlockIndex a) { return as_int(g.flat(a)); }

int max_block_distance(int L) { return 2 * (L / 2); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// ---------------------------------------------------------------- theta

Report run_theta(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  r.sampled = false;
  const int L = c.L;
  const cplx xi(c.xi_re, c.xi_im);
  const auto k = theta_kernel(xi, L);
  const auto fit = fit_decay(k);

  CsvTable tab{"theta.csv", {"s1", "s2", "re", "im", "abs", "envelope_value"}, {}};
  for (int s1 = 0; s1 < L; ++s1)
    for (int s2 = 0; s2 < L; ++s2) {
      const cplx v = k(s1, s2);
      Cell env = std::string();
      if (fit.admissible) env = fit.C * decay_envelope_value(k, s1, s2, fit.c);
      tab.rows.push_back({std::int64_t{s1}, std::int64_t{s2}, v.real(), v.imag(), std::abs(v), env});
    }
  r.tables.push_back(std::move(tab));

  r.aggregates.push_back(
      check("row_sum_dev", std::abs(k.row_sum() - 1.0 / (1.0 - xi)), 0.0, 1e-10, Comparison::le));

  if (L * L <= 576) {
    const BlockGeometry g(1, L);
    const VarianceProfile prof(g);
    const auto B = g.block_count();
    CMatrix A = CMatrix::Identity(B, B);
    for (std::size_t a = 0; a < B; ++a)
      for (std::size_t b = 0; b < B; ++b) A(a, b) -= xi * prof.block_entry(g.block(a), g.block(b));
    const CMatrix inv = A.inverse();
    double dev = 0.0;
    for (std::size_t a = 0; a < B; ++a)
      for (std::size_t b = 0; b < B; ++b) dev = std::max(dev, std::abs(inv(a, b) - k.entry(g.block(a), g.block(b))));
    r.aggregates.push_back(check("dense_oracle_dev", dev, 0.0, 1e-10, Comparison::le));
  }

  const auto series = theta_series_oracle(xi, L, c.K_max);
  double sdev = 0.0;
  for (std::size_t i = 0; i < series.values().size(); ++i)
    sdev = std::max(sdev, std::abs(series.values()[i] - k.values()[i]));
  r.aggregates.push_back(check("series_dev", sdev, 0.0, series_truncation_bound(xi, c.K_max) + 1e-12, Comparison::le));

  const auto der = fit_derivatives(k);
  r.aggregates.push_back(check("derivative_C1", der.C1, 0.0, 100.0, Comparison::le));
  r.aggregates.push_back(check("derivative_C2", der.C2, 0.0, 100.0, Comparison::le));
  if (fit.admissible) {
    r.aggregates.push_back(check("decay_c", fit.c, 0.0, 0.05, Comparison::ge));
    r.aggregates.push_back(check("decay_C", fit.C, 0.0, 100.0, Comparison::le));
  } else {
    r.aggregates.push_back(info("decay_c", fit.c, 0.0, "xi outside the decay-fit domain"));
  }
  r.aggregates.push_back(info("ell_hat", ell_hat(xi, L)));
  return r;
}

// ---------------------------------------------------------------- kloop

PrimitiveLoop component(const EvolveResult& ev, const std::string& s, const ExperimentConfig& c,
                        const BlockGeometry& g) {
  if (s.size() == 1) return k_closed_tensor(spectral_params(c.E, *c.t), s, g);
  if (const auto it = ev.loops.find(s); it != ev.loops.end()) return it->second;
  return k_evolve(s, c.E, *c.t, g).at(s);
}

Report run_kloop(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  r.sampled = false;
  const BlockGeometry g(c.W, c.L);
  const auto p = spectral_params(c.E, *c.t);
  const auto ev = k_evolve(c.sigma, c.E, *c.t, g);
  const auto& K = ev.at(c.sigma);
  const std::size_t n = c.sigma.size();
  std::optional<PrimitiveLoop> closed;
  if (n <= 3) closed = k_closed_tensor(p, c.sigma, g);

  CsvTable tab{"kloop.csv", {"offsets", "re", "im", "closed"}, {}};
  double dmax = 0.0, cmax = 0.0;
  for (std::size_t i = 0; i < K.values().size(); ++i) {
    const auto blocks = K.blocks(i);
    std::string off;
    for (std::size_t j = 1; j < blocks.size(); ++j) {
      if (j > 1) off += ';';
      off += std::to_string(blocks[j].a1) + ' ' + std::to_string(blocks[j].a2);
    }
    Cell cl = std::string();
    if (closed) {
      const double d = std::abs(K.values()[i] - closed->values()[i]);
      dmax = std::max(dmax, d);
      cmax = std::max(cmax, std::abs(closed->values()[i]));
      cl = d;
    }
    tab.rows.push_back({off, K.values()[i].real(), K.values()[i].imag(), cl});
  }
  r.tables.push_back(std::move(tab));

  r.aggregates.push_back(info("steps", ev.steps));
  r.aggregates.push_back(info("refinement_residual", ev.refinement_residual));
  if (closed) r.aggregates.push_back(check("closed_rel_dev", dmax / cmax, 0.0, 1e-6, Comparison::le));
  if (c.sigma.front() == '+' && c.sigma.back() == '-') {
    const auto kp = component(ev, ward_sigma(c.sigma, '+'), c, g);
    const auto km = component(ev, ward_sigma(c.sigma, '-'), c, g);
    r.aggregates.push_back(check("ward_residual", k_ward_residual(K, kp, km), 0.0, 1e-6, Comparison::le));
  }
  r.aggregates.push_back(check("sum_rule_constant", k_sum_rule_constant(K), 0.0, 10.0, Comparison::le));
  r.aggregates.push_back(check("magnitude_constant", k_magnitude_constant(K), 0.0, 10.0, Comparison::le));
  const auto fit = fit_loop_decay(K);
  r.aggregates.push_back(info("decay_c", fit.c));
  r.aggregates.push_back(info("decay_C", fit.C));
  return r;
}

// ---------------------------------------------------------------- ward

struct WardRow {
  LoopSpec spec;
  double rel;
};

Report run_ward(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const auto p = spectral_params(c.E, *c.t);
  const std::size_t B = g.block_count();

  CsvTable tab{"ward.csv", {"sample", "n", "sigma", "a1", "a2", "a3", "a4", "residual"}, {}};
  double worst = 0.0;
  for_each_sample<std::vector<WardRow>>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto h = sample_band(prof, seed_of(c, i));
        const auto eig = eigensystem(h);
        const auto G = Resolvent::from_eigensystem(eig, p.z_t, std::sqrt(p.t));
        const LoopEvaluator ev(G, g);
        const BlockIndex b0 = g.block(i % B), b1 = g.block((7 * i + 3) % B), b2 = g.block((3 * i + 5) % B);
        std::vector<WardRow> rows;
        for (LoopSpec spec : {LoopSpec{"+-", {b0, b0}}, LoopSpec{"++-", {b0, b1, b0}}, LoopSpec{"+--", {b1, b0, b0}},
                              LoopSpec{"+-+-", {b0, b1, b2, b0}}})
          rows.push_back({spec, ward_residual(ev, spec).rel});
        return rows;
      },
      [&](std::size_t i, const std::vector<WardRow>& rows) {
        ++r.n_used;
        for (const auto& w : rows) {
          std::vector<Cell> row{as_int(i), as_int(w.spec.n()), w.spec.sigma};
          for (std::size_t j = 0; j < 4; ++j) {
            if (j + 1 < w.spec.n())
              row.emplace_back(flat_block(g, w.spec.a[j]));
            else
              row.emplace_back(std::string());
          }
          row.emplace_back(w.rel);
          tab.rows.push_back(std::move(row));
          worst = std::max(worst, w.rel);
        }
      },
      r.failures);
  r.tables.push_back(std::move(tab));
  if (r.empty()) return r;

  r.aggregates.push_back(check("loop_ward_max_rel", worst, 0.0, 1e-9, Comparison::le));
  const double kc2 = k_ward_residual(k_closed_tensor(p, "+-", g), k_closed_tensor(p, "+", g), k_closed_tensor(p, "-", g));
  const double kc3 =
      k_ward_residual(k_closed_tensor(p, "++-", g), k_closed_tensor(p, "++", g), k_closed_tensor(p, "-+", g));
  r.aggregates.push_back(check("k_ward_closed", std::max(kc2, kc3), 0.0, 1e-10, Comparison::le));
  const auto ev = k_evolve("+--", c.E, *c.t, g);
  const double ke = k_ward_residual(ev.at("+--"), component(ev, "+-", c, g), component(ev, "--", c, g));
  r.aggregates.push_back(check("k_ward_evolved", ke, 0.0, 1e-6, Comparison::le));
  return r;
}

// ---------------------------------------------------------------- local law

Report run_local_law(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const cplx z(c.E, *c.eta);
  const double M = control_parameter(*c.eta, g);
  const double C = c.threshold_constant();
  const double entry_thr = C / std::sqrt(M), block_thr = C / M;

  CsvTable tab{"local_law.csv", {"sample", "max_entry_dev", "max_block_trace_dev", "M_eta"}, {}};
  std::size_t entry_over = 0, block_over = 0, order_violations = 0;
  Running entry, block;
  for_each_sample<LocalLawStats>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto h = sample_band(prof, seed_of(c, i));
        return local_law_stats(Resolvent::direct(h.H, z), prof);
      },
      [&](std::size_t i, const LocalLawStats& s) {
        ++r.n_used;
        tab.rows.push_back({as_int(i), s.max_entry_dev, s.max_block_trace_dev, s.M_eta});
        entry.add(s.max_entry_dev);
        block.add(s.max_block_trace_dev);
        entry_over += s.max_entry_dev > entry_thr;
        block_over += s.max_block_trace_dev > block_thr;
        order_violations += s.max_block_trace_dev > s.max_entry_dev;
      },
      r.failures);
  r.tables.push_back(std::move(tab));
  if (r.empty()) return r;

  const double n = static_cast<double>(r.n_used);
  auto frac_se = [n](double f) { return std::sqrt(f * (1.0 - f) / n); };
  const double fe = static_cast<double>(entry_over) / n, fb = static_cast<double>(block_over) / n;
  r.aggregates.push_back(info("M_eta", M));
  r.aggregates.push_back(info("mean_max_entry_dev", entry.mean, entry.se()));
  r.aggregates.push_back(info("mean_max_block_trace_dev", block.mean, block.se()));
  r.aggregates.push_back(check("entry_exceed_fraction", fe, frac_se(fe), c.max_fraction, Comparison::lt_raw,
                               "threshold per sample: constant * M_eta^-1/2"));
  r.aggregates.push_back(check("block_exceed_fraction", fb, frac_se(fb), c.max_fraction, Comparison::lt_raw,
                               "threshold per sample: constant * M_eta^-1"));
  r.aggregates.push_back(
      check("block_above_entry_count", static_cast<double>(order_violations), 0.0, 0.0, Comparison::le));
  return r;
}

// ---------------------------------------------------------------- quantum diffusion

struct TPair {
  CMatrix pm, pp;
};

Report run_qdiff(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const cplx z(c.E, *c.eta);
  const cplx m = semicircle_m(z);
  const double w2 = static_cast<double>(g.block_size());
  const auto th_pm = theta_kernel(std::norm(m), c.L);
  const auto th_pp = theta_kernel(m * m, c.L);
  const std::size_t B = g.block_count();

  std::vector<RunningC> acc_pm(B * B), acc_pp(B * B), red_pm(B), red_pp(B);
  for_each_sample<TPair>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto h = sample_band(prof, seed_of(c, i));
        const auto G = Resolvent::direct(h.H, z);
        return TPair{t_matrix(G, g, TKind::plus_minus), t_matrix(G, g, TKind::plus_plus)};
      },
      [&](std::size_t, const TPair& T) {
        ++r.n_used;
        for (std::size_t a = 0; a < B; ++a)
          for (std::size_t b = 0; b < B; ++b) {
            acc_pm[a * B + b].add(T.pm(a, b));
            acc_pp[a * B + b].add(T.pp(a, b));
          }
        for (std::size_t d = 0; d < B; ++d) {
          const BlockIndex off = g.block(d);
          cplx spm = 0.0, spp = 0.0;
          for (std::size_t a = 0; a < B; ++a) {
            const BlockIndex x = g.block(a);
            const std::size_t b = g.flat(BlockIndex{wrap(x.a1 + off.a1, c.L), wrap(x.a2 + off.a2, c.L)});
            spm += T.pm(a, b);
            spp += T.pp(a, b);
          }
          red_pm[d].add(spm / static_cast<double>(B));
          red_pp[d].add(spp / static_cast<double>(B));
        }
      },
      r.failures);

  const double M = control_parameter(*c.eta, g);
  const double thr = c.threshold_constant() / (M * M);
  const std::vector<std::string> header{"a1", "a2", "b1", "b2", "emp_re", "emp_im", "pred_re", "pred_im", "stderr"};

  auto build = [&](const std::string& name, const std::string& file, const std::vector<RunningC>& acc,
                   const std::vector<RunningC>& red, const PropagatorKernel& th, cplx pref) {
    CsvTable tab{file, header, {}};
    if (r.empty()) {
      r.tables.push_back(std::move(tab));
      return;
    }
    auto pred = [&](BlockIndex a, BlockIndex b) { return pref * th.entry(a, b) / w2; };
    double worst = 0.0, worst_se = 0.0;
    bool all_pass = true;
    for (std::size_t a = 0; a < B; ++a)
      for (std::size_t b = 0; b < B; ++b) {
        const auto& s = acc[a * B + b];
        const double dev = std::abs(s.mean() - pred(g.block(a), g.block(b)));
        all_pass = all_pass && dev <= thr + 3.0 * s.se();
        if (dev > worst) {
          worst = dev;
          worst_se = s.se();
        }
      }
    auto push = [&](BlockIndex a, BlockIndex b, const RunningC& s) {
      const cplx p = pred(a, b);
      tab.rows.push_back({std::int64_t{a.a1}, std::int64_t{a.a2}, std::int64_t{b.a1}, std::int64_t{b.a2},
                          s.mean().real(), s.mean().imag(), p.real(), p.imag(), s.se()});
    };
    if (c.reduce) {
      for (std::size_t d = 0; d < B; ++d) push(BlockIndex{}, g.block(d), red[d]);
    } else {
      for (std::size_t a = 0; a < B; ++a)
        for (std::size_t b = 0; b < B; ++b) push(g.block(a), g.block(b), acc[a * B + b]);
    }
    r.tables.push_back(std::move(tab));
    Aggregate agg = check(name, worst, worst_se, thr, Comparison::le,
                          "max over block pairs; each pair held to constant * M_eta^-2 + 3 se");
    agg.pass = all_pass;
    r.aggregates.push_back(agg);
  };
  build("qdiff_pm_max_dev", "qdiff_pm.csv", acc_pm, red_pm, th_pm, std::norm(m));
  build("qdiff_pp_max_dev", "qdiff_pp.csv", acc_pp, red_pp, th_pp, m * m);
  if (!r.empty()) r.aggregates.insert(r.aggregates.begin(), info("M_eta", M));
  return r;
}

// ---------------------------------------------------------------- delocalization

struct DelocPair {
  double band, gue;
  std::size_t band_bulk, gue_bulk;
};

Report run_deloc(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const double bound = std::pow(std::log(static_cast<double>(g.N())), 3);

  CsvTable band_tab{"deloc.csv", {"sample", "stat", "n_bulk"}, {}};
  CsvTable gue_tab{"deloc_gue.csv", {"sample", "stat", "n_bulk"}, {}};
  std::vector<double> band, gue;
  for_each_sample<DelocPair>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto eb = eigensystem(sample_band(prof, seed_of(c, i)));
        const auto eg = eigensystem(sample_gue(g.N(), seed_of(c, i)));
        return DelocPair{deloc_stat(eb, c.kappa), deloc_stat(eg, c.kappa), bulk_window(eb.lambda, c.kappa).size(),
                         bulk_window(eg.lambda, c.kappa).size()};
      },
      [&](std::size_t i, const DelocPair& d) {
        ++r.n_used;
        band_tab.rows.push_back({as_int(i), d.band, as_int(d.band_bulk)});
        gue_tab.rows.push_back({as_int(i), d.gue, as_int(d.gue_bulk)});
        band.push_back(d.band);
        gue.push_back(d.gue);
      },
      r.failures);
  r.tables.push_back(std::move(band_tab));
  r.tables.push_back(std::move(gue_tab));
  if (r.empty()) return r;

  auto frac_within = [&](const std::vector<double>& v) {
    return static_cast<double>(std::count_if(v.begin(), v.end(), [&](double s) { return s <= bound; })) /
           static_cast<double>(v.size());
  };
  const double fb = frac_within(band), fg = frac_within(gue);
  const double n = static_cast<double>(r.n_used);
  r.aggregates.push_back(info("log_N_cubed", bound));
  r.aggregates.push_back(check("band_within_fraction", fb, std::sqrt(fb * (1 - fb) / n), 1.0 - c.max_fraction,
                               Comparison::ge_raw));
  r.aggregates.push_back(info("gue_within_fraction", fg, std::sqrt(fg * (1 - fg) / n)));
  const double mb = median(band), mg = median(gue);
  r.aggregates.push_back(info("band_median", mb));
  r.aggregates.push_back(info("gue_median", mg));
  r.aggregates.push_back(check("median_ratio", std::max(mb / mg, mg / mb), 0.0, c.ratio, Comparison::le,
                               "max(band/gue, gue/band) of the medians"));
  return r;
}

// ---------------------------------------------------------------- QUE

struct QueSample {
  std::vector<double> band, gue;
  double band_subset = 0.0, gue_subset = 0.0;
};

Aggregate ratio_check(const std::string& name, const Running& num, const Running& den, double limit,
                      const std::string& note) {
  const double q = num.mean / den.mean;
  const double se = std::abs(q) * std::hypot(num.se() / num.mean, den.se() / den.mean);
  return check(name, q, se, limit, Comparison::le, note);
}

Report run_que(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const std::size_t B = g.block_count();
  const bool subset = !c.blocks.empty();

  CsvTable band_tab{"que.csv", {"sample", "block_a1", "block_a2", "stat"}, {}};
  CsvTable gue_tab{"que_gue.csv", {"sample", "block_a1", "block_a2", "stat"}, {}};
  CsvTable band_sub{"que_subset.csv", {"sample", "stat"}, {}};
  CsvTable gue_sub{"que_subset_gue.csv", {"sample", "stat"}, {}};
  Running band, gue, bsub, gsub;
  for_each_sample<QueSample>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto eb = eigensystem(sample_band(prof, seed_of(c, i)));
        const auto eg = eigensystem(sample_gue(g.N(), seed_of(c, i)));
        QueSample s;
        for (std::size_t a = 0; a < B; ++a) {
          s.band.push_back(que_stat(eb, g, c.E, g.block(a), c.window));
          s.gue.push_back(que_stat(eg, g, c.E, g.block(a), c.window));
        }
        if (subset) {
          s.band_subset = que_stat(eb, g, c.E, c.blocks, c.window);
          s.gue_subset = que_stat(eg, g, c.E, c.blocks, c.window);
        }
        return s;
      },
      [&](std::size_t i, const QueSample& s) {
        ++r.n_used;
        double mb = 0.0, mg = 0.0;
        for (std::size_t a = 0; a < B; ++a) {
          const BlockIndex blk = g.block(a);
          band_tab.rows.push_back({as_int(i), std::int64_t{blk.a1}, std::int64_t{blk.a2}, s.band[a]});
          gue_tab.rows.push_back({as_int(i), std::int64_t{blk.a1}, std::int64_t{blk.a2}, s.gue[a]});
          mb += s.band[a];
          mg += s.gue[a];
        }
        band.add(mb / static_cast<double>(B));
        gue.add(mg / static_cast<double>(B));
        if (subset) {
          band_sub.rows.push_back({as_int(i), s.band_subset});
          gue_sub.rows.push_back({as_int(i), s.gue_subset});
          bsub.add(s.band_subset);
          gsub.add(s.gue_subset);
        }
      },
      r.failures);
  r.tables.push_back(std::move(band_tab));
  r.tables.push_back(std::move(gue_tab));
  if (subset) {
    r.tables.push_back(std::move(band_sub));
    r.tables.push_back(std::move(gue_sub));
  }
  if (r.empty()) return r;

  r.aggregates.push_back(info("band_mean", band.mean, band.se()));
  r.aggregates.push_back(info("gue_mean", gue.mean, gue.se()));
  r.aggregates.push_back(ratio_check("mean_ratio", band, gue, c.ratio, "band mean over GUE mean"));
  if (subset) {
    r.aggregates.push_back(info("band_subset_mean", bsub.mean, bsub.se()));
    r.aggregates.push_back(info("gue_subset_mean", gsub.mean, gsub.se()));
    r.aggregates.push_back(ratio_check("subset_mean_ratio", bsub, gsub, c.ratio, "calibrated threshold"));
  }
  return r;
}

// ---------------------------------------------------------------- universality

struct GapSample {
  GapRatioStats band, gue, poisson;
  std::vector<GapRatioStats> ou;
};

struct GapAcc {
  Running per_sample;
  double sum = 0.0;
  std::size_t count = 0;

  void add(const GapRatioStats& s) {
    per_sample.add(s.mean_r_tilde);
    sum += s.sum;
    count += s.count;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double se() const { return per_sample.se(); }
};

std::vector<double> poisson_points(std::size_t n, SeedSpec seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.master), static_cast<std::uint32_t>(seed.master >> 32),
                    static_cast<std::uint32_t>(seed.index), static_cast<std::uint32_t>(seed.index >> 32),
                    static_cast<std::uint32_t>(kPoissonTag)};
  std::mt19937_64 eng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> pts(n);
  for (auto& p : pts) p = u(eng);
  std::sort(pts.begin(), pts.end());
  return pts;
}

Report run_universality(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);

  GapAcc band, gue, poisson;
  std::vector<GapAcc> ou(c.ou_times.size());
  for_each_sample<GapSample>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto h = sample_band(prof, seed_of(c, i));
        GapSample s;
        s.band = gap_ratio_stats(eigensystem(h, false), c.kappa);
        s.gue = gap_ratio_stats(eigensystem(sample_gue(g.N(), seed_of(c, i)), false), c.kappa);
        for (double t : c.ou_times) s.ou.push_back(gap_ratio_stats(eigensystem(ou_interpolate(h, t, seed_of(c, i)), false), c.kappa));
        s.poisson = gap_ratio_stats(poisson_points(g.N(), seed_of(c, i)));
        return s;
      },
      [&](std::size_t, const GapSample& s) {
        ++r.n_used;
        band.add(s.band);
        gue.add(s.gue);
        poisson.add(s.poisson);
        for (std::size_t k = 0; k < ou.size(); ++k) ou[k].add(s.ou[k]);
      },
      r.failures);

  CsvTable tab{"universality.csv", {"ensemble", "ou_t", "mean_r", "stderr", "n_gaps"}, {}};
  if (r.empty()) {
    r.tables.push_back(std::move(tab));
    return r;
  }
  auto row = [&](const std::string& name, Cell t, const GapAcc& a) {
    tab.rows.push_back({name, t, a.mean(), a.se(), as_int(a.count)});
  };
  row("band", std::string(), band);
  row("gue", std::string(), gue);
  for (std::size_t k = 0; k < ou.size(); ++k) row("ou", c.ou_times[k], ou[k]);
  row("poisson", std::string(), poisson);
  r.tables.push_back(std::move(tab));

  const double thr = c.threshold_constant();
  auto diff = [&](const std::string& name, const GapAcc& a, const GapAcc& b, double limit, Comparison cmp) {
    return check(name, std::abs(a.mean() - b.mean()), std::hypot(a.se(), b.se()), limit, cmp);
  };
  r.aggregates.push_back(info("band_mean_r", band.mean(), band.se()));
  r.aggregates.push_back(info("gue_mean_r", gue.mean(), gue.se()));
  r.aggregates.push_back(info("poisson_mean_r", poisson.mean(), poisson.se()));
  r.aggregates.push_back(diff("band_vs_gue", band, gue, thr, Comparison::le));
  r.aggregates.push_back(check("band_gaps", static_cast<double>(band.count), 0.0, 1e4, Comparison::ge_raw));
  r.aggregates.push_back(check("gue_gaps", static_cast<double>(gue.count), 0.0, 1e4, Comparison::ge_raw));
  r.aggregates.push_back(diff("poisson_vs_band", poisson, band, c.separation, Comparison::ge));
  r.aggregates.push_back(diff("poisson_vs_gue", poisson, gue, c.separation, Comparison::ge));
  if (!ou.empty()) {
    const auto first = std::min_element(c.ou_times.begin(), c.ou_times.end()) - c.ou_times.begin();
    const auto last = std::max_element(c.ou_times.begin(), c.ou_times.end()) - c.ou_times.begin();
    if (c.ou_times[first] == 0.0) r.aggregates.push_back(diff("ou_start_vs_band", ou[first], band, thr, Comparison::le));
    r.aggregates.push_back(diff("ou_end_vs_gue", ou[last], gue, thr, Comparison::le));
    r.aggregates.back().note = "largest OU time; intermediate times are reported only";
  }
  return r;
}

// ---------------------------------------------------------------- L - K decay

Report run_decay(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const auto p = spectral_params(c.E, *c.t);
  const int L = c.L;
  const std::size_t B = g.block_count();
  const int dmax = max_block_distance(L);
  const double w4 = static_cast<double>(g.block_size() * g.block_size());

  // Primitive loop and distance of every (slab-0 block, block) pair.
  std::vector<double> K(static_cast<std::size_t>(L) * B);
  std::vector<int> dist(K.size());
  std::vector<std::size_t> pairs_at(dmax + 1, 0);
  for (int a2 = 0; a2 < L; ++a2)
    for (std::size_t b = 0; b < B; ++b) {
      const BlockIndex a{0, a2};
      K[a2 * B + b] = k_closed(p, "+-", {a, g.block(b)}, g).real();
      dist[a2 * B + b] = periodic_distance(a, g.block(b), L);
      ++pairs_at[dist[a2 * B + b]];
    }

  std::vector<Running> acc(dmax + 1);
  for_each_sample<std::vector<double>>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto h = sample_band(prof, seed_of(c, i));
        const auto cols = slab_zero_columns(h.H, g, p.z_t, std::sqrt(p.t), Precision::f64);
        std::vector<double> Lab(K.size(), 0.0);
        for (std::size_t j = 0; j < cols.sites.size(); ++j) {
          const std::size_t a2 = g.block_of_flat(cols.sites[j]);
          for (std::size_t y = 0; y < g.N(); ++y) Lab[a2 * B + g.block_of_flat(y)] += std::norm(cols.G(y, j));
        }
        std::vector<double> by_d(dmax + 1, 0.0);
        for (std::size_t k = 0; k < K.size(); ++k) by_d[dist[k]] += Lab[k] / w4 - K[k];
        for (int d = 0; d <= dmax; ++d) by_d[d] /= static_cast<double>(pairs_at[d]);
        return by_d;
      },
      [&](std::size_t, const std::vector<double>& v) {
        ++r.n_used;
        for (int d = 0; d <= dmax; ++d) acc[d].add(v[d]);
      },
      r.failures);

  CsvTable tab{"decay.csv", {"dist", "mean_abs_LK", "envelope", "ratio"}, {}};
  if (r.empty()) {
    r.tables.push_back(std::move(tab));
    return r;
  }
  double fitted = 0.0, raw = 0.0;
  std::size_t increases = 0;
  for (int d = 0; d <= dmax; ++d) {
    const double env = decay_envelope(p.t, c.D, g, d, c.E);
    const double m = std::abs(acc[d].mean);
    tab.rows.push_back({std::int64_t{d}, m, env, m / env});
    fitted = std::max(fitted, std::max(0.0, m - 3.0 * acc[d].se()) / env);
    raw = std::max(raw, m / env);
    if (d > 0 && env > decay_envelope(p.t, c.D, g, d - 1, c.E)) ++increases;
  }
  r.tables.push_back(std::move(tab));
  r.aggregates.push_back(info("M_t", flow_point(c.E, *c.t, g).scale.M_t));
  r.aggregates.push_back(check("fitted_C", fitted, 0.0, c.threshold_constant(), Comparison::le,
                               "max over distances of (|mean(L-K)| - 3 se) / T"));
  r.aggregates.push_back(info("raw_ratio_max", raw));
  r.aggregates.push_back(check("envelope_increases", static_cast<double>(increases), 0.0, 0.0, Comparison::le));
  return r;
}

// ---------------------------------------------------------------- CLT decorrelation

/// |C(d)| / C(0) for the pooled block-trace covariance over samples in [0, n)
/// except [skip_lo, skip_hi).
std::vector<double> block_correlation(const std::vector<std::vector<cplx>>& X, const BlockGeometry& g,
                                      std::size_t skip_lo, std::size_t skip_hi) {
  const std::size_t B = g.block_count();
  const int dmax = max_block_distance(g.L());
  std::vector<cplx> mu(B, 0.0);
  double n = 0.0;
  for (std::size_t s = 0; s < X.size(); ++s) {
    if (s >= skip_lo && s < skip_hi) continue;
    n += 1.0;
    for (std::size_t a = 0; a < B; ++a) mu[a] += X[s][a];
  }
  for (auto& v : mu) v /= n;
  std::vector<cplx> cov(dmax + 1, 0.0);
  std::vector<double> cnt(dmax + 1, 0.0);
  for (std::size_t s = 0; s < X.size(); ++s) {
    if (s >= skip_lo && s < skip_hi) continue;
    for (std::size_t a = 0; a < B; ++a)
      for (std::size_t b = 0; b < B; ++b) {
        const int d = periodic_distance(g.block(a), g.block(b), g.L());
        cov[d] += (X[s][a] - mu[a]) * std::conj(X[s][b] - mu[b]);
        cnt[d] += 1.0;
      }
  }
  std::vector<double> corr(dmax + 1);
  const double c0 = cov[0].real() / cnt[0];
  for (int d = 0; d <= dmax; ++d) corr[d] = std::abs(cov[d] / cnt[d]) / c0;
  return corr;
}

Report run_clt(const ExperimentConfig& c) {
  Report r;
  r.config = c;
  const BlockGeometry g(c.W, c.L);
  const VarianceProfile prof(g);
  const cplx z(c.E, *c.eta);
  const std::size_t B = g.block_count();
  const double w2 = static_cast<double>(g.block_size());
  const int dmax = max_block_distance(c.L);

  std::vector<std::vector<cplx>> X;
  for_each_sample<std::vector<cplx>>(
      c.n_samples, c.workers,
      [&](std::size_t i) {
        const auto h = sample_band(prof, seed_of(c, i));
        const CVector diag = slab_diagonal(h.H, g, z, 1.0, c.precision);
        std::vector<cplx> x(B, 0.0);
        for (std::size_t s = 0; s < g.N(); ++s) x[g.block_of_flat(s)] += diag(s) / w2;
        return x;
      },
      [&](std::size_t, const std::vector<cplx>& x) {
        ++r.n_used;
        X.push_back(x);
      },
      r.failures);

  CsvTable tab{"clt.csv", {"dist", "corr", "stderr"}, {}};
  if (r.empty()) {
    r.tables.push_back(std::move(tab));
    return r;
  }
  if (X.size() < 2) {
    r.tables.push_back(std::move(tab));
    Aggregate a = info("corr_at_0", 0.0, 0.0, "needs at least 2 samples");
    a.cmp = Comparison::ge;
    a.threshold = c.corr_near;
    a.pass = false;
    r.aggregates.push_back(a);
    return r;
  }

  const auto corr = block_correlation(X, g, 0, 0);
  const std::size_t groups = std::min<std::size_t>(20, X.size());
  std::vector<std::vector<double>> jk;
  for (std::size_t k = 0; k < groups; ++k)
    jk.push_back(block_correlation(X, g, k * X.size() / groups, (k + 1) * X.size() / groups));
  std::vector<double> se(dmax + 1, 0.0);
  for (int d = 0; d <= dmax; ++d) {
    double mean = 0.0;
    for (const auto& v : jk) mean += v[d];
    mean /= static_cast<double>(groups);
    double ss = 0.0;
    for (const auto& v : jk) ss += (v[d] - mean) * (v[d] - mean);
    se[d] = std::sqrt(static_cast<double>(groups - 1) / static_cast<double>(groups) * ss);
  }
  for (int d = 0; d <= dmax; ++d) tab.rows.push_back({std::int64_t{d}, corr[d], se[d]});
  r.tables.push_back(std::move(tab));

  const double ell = ell_of_eta(*c.eta, c.L);
  r.aggregates.push_back(info("ell_z", ell));
  r.aggregates.push_back(check("corr_at_0", corr[0], se[0], c.corr_near, Comparison::ge));
  double far = 0.0, far_se = 0.0;
  bool any = false;
  for (int d = 0; d <= dmax; ++d)
    if (d >= 4.0 * ell && corr[d] >= far) {
      far = corr[d];
      far_se = se[d];
      any = true;
    }
  if (any) {
    r.aggregates.push_back(check("corr_beyond_4ell", far, far_se, c.corr_far, Comparison::le));
  } else {
    Aggregate a = check("corr_beyond_4ell", 0.0, 0.0, c.corr_far, Comparison::le,
                        "no block distance reaches 4 ell(z); check is vacuous");
    r.aggregates.push_back(a);
  }
  r.aggregates.push_back(info("corr_at_max_distance", corr[dmax], se[dmax]));
  return r;
}

// ---------------------------------------------------------------- output

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_cell(const Cell& c) {
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

std::string comparison_name(Comparison c) {
  switch (c) {
    case Comparison::le: return "le";
    case Comparison::ge: return "ge";
    case Comparison::lt_raw: return "lt";
    case Comparison::ge_raw: return "ge_raw";
    case Comparison::none: break;
  }
  return "none";
}

json config_echo(const ExperimentConfig& c) {
  json j;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  for (const auto& key : config_keys(c.experiment)) {
    if (key == "W") j[key] = c.W;
    else if (key == "L") j[key] = c.L;
    else if (key == "E") j[key] = c.E;
    else if (key == "eta") j[key] = opt(c.eta);
    else if (key == "t") j[key] = opt(c.t);
    else if (key == "kappa") j[key] = c.kappa;
    else if (key == "n_samples") j[key] = c.n_samples;
    else if (key == "seed") j[key] = c.seed;
    else if (key == "xi_re") j[key] = c.xi_re;
    else if (key == "xi_im") j[key] = c.xi_im;
    else if (key == "K_max") j[key] = c.K_max;
    else if (key == "sigma") j[key] = c.sigma;
    else if (key == "window") j[key] = c.window;
    else if (key == "ratio") j[key] = c.ratio;
    else if (key == "separation") j[key] = c.separation;
    else if (key == "D") j[key] = c.D;
    else if (key == "corr_far") j[key] = c.corr_far;
    else if (key == "corr_near") j[key] = c.corr_near;
    else if (key == "constant") j[key] = c.threshold_constant();
    else if (key == "max_fraction") j[key] = c.max_fraction;
    else if (key == "precision") j[key] = c.precision == Precision::f32 ? "f32" : "f64";
    else if (key == "ou_times") j[key] = c.ou_times;
    else if (key == "blocks") {
      json arr = json::array();
      for (const auto& b : c.blocks) arr.push_back({b.a1, b.a2});
      j[key] = arr;
    }
  }
  if (c.experiment == "qdiff") j["reduce"] = c.reduce;
  return j;
}

}  // namespace

bool Report::pass() const {
  if (empty()) return false;
  return std::all_of(aggregates.begin(), aggregates.end(), [](const Aggregate& a) { return a.pass; });
}

const Aggregate& Report::aggregate(const std::string& name) const {
  for (const auto& a : aggregates)
    if (a.name == name) return a;
  throw std::out_of_range("no aggregate named " + name);
}

const CsvTable& Report::table(const std::string& file) const {
  for (const auto& t : tables)
    if (t.file == file) return t;
  throw std::out_of_range("no table named " + file);
}

std::string version_string() { return "bandlab 0.1.0"; }

double decay_envelope(double t, double D, const BlockGeometry& geom, double ell, double E) {
  const auto fp = flow_point(E, t, geom);
  const double Mt = fp.scale.M_t;
  return std::exp(-std::sqrt(ell / fp.scale.ell_t)) / (Mt * Mt) + std::pow(static_cast<double>(geom.W()), -D);
}

Report run_experiment(const ExperimentConfig& config) {
  check_admissible(config);
  const std::string& x = config.experiment;
  if (x == "theta") return run_theta(config);
  if (x == "kloop") return run_kloop(config);
  if (x == "ward") return run_ward(config);
  if (x == "local-law") return run_local_law(config);
  if (x == "qdiff") return run_qdiff(config);
  if (x == "deloc") return run_deloc(config);
  if (x == "que") return run_que(config);
  if (x == "universality") return run_universality(config);
  if (x == "decay") return run_decay(config);
  if (x == "clt") return run_clt(config);
  throw ConfigError("unknown experiment: " + x);
}

std::string csv_text(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) out += (i ? "," : "") + table.header[i];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_cell(row[i]);
    out += '\n';
  }
  return out;
}

std::string report_json(const Report& report) {
  json j;
  j["experiment"] = report.config.experiment;
  j["version"] = version_string();
  j["seed"] = report.config.seed;
  j["config"] = config_echo(report.config);
  if (report.sampled) {
    json failed = json::array();
    for (const auto& f : report.failures) failed.push_back({{"index", f.index}, {"error", f.message}});
    j["samples"] = {{"requested", report.config.n_samples},
                    {"used", report.n_used},
                    {"failed", failed},
                    {"empty", report.empty()}};
  }
  json aggs = json::array();
  for (const auto& a : report.aggregates) {
    json e;
    e["name"] = a.name;
    e["value"] = a.value;
    e["stderr"] = a.se;
    if (a.cmp != Comparison::none) {
      e["threshold"] = a.threshold;
      e["comparison"] = comparison_name(a.cmp);
    }
    e["pass"] = a.pass;
    if (!a.note.empty()) e["note"] = a.note;
    aggs.push_back(e);
  }
  j["aggregates"] = aggs;
  json files = json::array();
  for (const auto& t : report.tables) files.push_back(t.file);
  j["files"] = files;
  j["pass"] = report.pass();
  return j.dump(2) + "\n";
}

void emit_report(const Report& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
  };
  write(dir / "report.json", report_json(report));
  for (const auto& t : report.tables) write(dir / t.file, csv_text(t));
}

int exit_code(const Report& report) {
  if (report.empty()) return 3;
  return report.pass() ? 0 : 1;
}

}  // namespace bandlab

// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 3 7 que    run the listed ones

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bandlab/config.hpp"
#include "bandlab/experiments.hpp"
#include "bandlab/linalg.hpp"
#include "bandlab/primitive.hpp"
#include "bandlab/propagator.hpp"

using namespace bandlab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

ExperimentConfig config(const std::string& experiment, const std::string& text) {
  ExperimentConfig c = parse_config(experiment, text, "acceptance:" + experiment);
  c.workers = workers();
  return c;
}

void report_aggregates(Outcome& o, const Report& r) {
  for (const auto& a : r.aggregates) {
    o.detail << "; " << a.name << "=" << a.value;
    if (a.cmp != Comparison::none) o.detail << (a.pass ? "" : "(FAIL)");
  }
  if (!r.failures.empty()) o.detail << "; failed samples=" << r.failures.size();
}

std::vector<cplx> xi_grid() {
  std::vector<cplx> g{0.2, 0.5, 0.9, cplx(0.5, 0.3)};
  for (double t : {0.3, 0.8})
    for (double E : {0.0, 1.0}) {
      const cplx m = boundary_m(E);
      g.push_back(t * m * m);
    }
  return g;
}

/// Dense (1 - xi S^(B))^-1 built from the torus metric alone.
Eigen::MatrixXcd dense_theta(cplx xi, int L) {
  const int B = L * L;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(B, B);
  for (int a = 0; a < B; ++a)
    for (int b = 0; b < B; ++b)
      if (periodic_distance(a / L - b / L, a % L - b % L, L) <= 1) A(a, b) -= xi * 0.2;
  return A.inverse();
}

Outcome c1_propagator_exactness() {
  Outcome o;
  double dense_dev = 0.0, series_excess = -1.0;
  for (int L = 3; L <= 12; ++L)
    for (cplx xi : xi_grid()) {
      const auto k = theta_kernel(xi, L);
      const auto D = dense_theta(xi, L);
      for (int a = 0; a < L * L; ++a)
        for (int b = 0; b < L * L; ++b)
          dense_dev = std::max(dense_dev, std::abs(D(a, b) - k(a / L - b / L, a % L - b % L)));
      const int K = 400;
      const auto s = theta_series_oracle(xi, L, K);
      const double bound = series_truncation_bound(xi, K);
      for (std::size_t i = 0; i < s.values().size(); ++i)
        series_excess = std::max(series_excess, std::abs(s.values()[i] - k.values()[i]) - bound);
    }
  o.detail << "max |FFT - dense| = " << dense_dev << "; max (|series - FFT| - bound) = " << series_excess;
  o.require(dense_dev <= 1e-10, "dense oracle");
  o.require(series_excess <= 1e-12, "series within its truncation bound");
  return o;
}

Outcome c2_row_sums() {
  Outcome o;
  double dev = 0.0;
  for (int L = 3; L <= 12; ++L)
    for (cplx xi : xi_grid()) {
      const auto k = theta_kernel(xi, L);
      cplx sum = 0.0;
      for (const auto& v : k.values()) sum += v;
      dev = std::max(dev, std::abs(sum - 1.0 / (1.0 - xi)));
    }
  o.detail << "max |sum_s k(s) - 1/(1-xi)| = " << dev;
  o.require(dev <= 1e-10, "row sums");
  return o;
}

Outcome run_and_check(const ExperimentConfig& c) {
  Outcome o;
  const Report r = run_experiment(c);
  o.detail << c.experiment << " n_used=" << r.n_used;
  report_aggregates(o, r);
  o.require(!r.empty(), "nonempty sample set");
  o.require(r.failures.empty(), "no failed samples");
  for (const auto& a : r.aggregates) o.require(a.pass, a.name);
  return o;
}

Outcome c3_ward() {
  return run_and_check(config("ward", "W = 8\nL = 4\nE = 0.3\nt = 0.6\nn_samples = 20\nseed = 1003\n"));
}

Outcome c4_primitive_oracle() {
  Outcome o;
  double worst = 0.0;
  for (int L : {3, 4, 8})
    for (double t : {0.3, 0.7})
      for (double E : {0.0, 1.0})
        for (const std::string sigma : {"+-", "++", "++-", "+-+"}) {
          const BlockGeometry g(2, L);
          const auto K = k_evolve(sigma, E, t, g).at(sigma);
          const auto C = k_closed_tensor(spectral_params(E, t), sigma, g);
          double d = 0.0, m = 0.0;
          for (std::size_t i = 0; i < C.values().size(); ++i) {
            d = std::max(d, std::abs(K.values()[i] - C.values()[i]));
            m = std::max(m, std::abs(C.values()[i]));
          }
          worst = std::max(worst, d / m);
        }
  o.detail << "max relative |K_evolve - K_closed| = " << worst;
  o.require(worst <= 1e-6, "evolved vs closed");
  return o;
}

BlockTensor random_tensor(std::size_t rank, int L, unsigned seed) {
  BlockTensor A(rank, L);
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> n;
  for (auto& v : A.values()) v = cplx(n(eng), n(eng));
  return A;
}

Outcome c5_sum_zero() {
  Outcome o;
  double pq = 0.0, pth = 0.0, semi = 0.0, keep = 0.0;
  const int L = 4;
  for (std::size_t n : {2, 3})
    for (double t : {0.2, 0.5, 0.9}) {
      const auto A = random_tensor(n, L, static_cast<unsigned>(17 * n + 100 * t));
      for (const auto& v : p_project(q_sumzero(t, A))) pq = std::max(pq, std::abs(v) / A.max_abs());
      for (const auto& v : p_project(vartheta_profile(t, n, L))) pth = std::max(pth, std::abs(v - 1.0));
      const std::string sigma = n == 2 ? "+-" : "++-";
      for (double E : {0.0, 0.8}) {
        const double s = 0.5 * t, u = 0.25 * t;
        const auto direct = u_apply(u, t, sigma, E, A);
        const auto comp = u_apply(u, s, sigma, E, u_apply(s, t, sigma, E, A));
        for (std::size_t i = 0; i < A.values().size(); ++i)
          semi = std::max(semi, std::abs(direct[i] - comp[i]) / A.max_abs());
        const auto Z = u_apply(u, t, sigma, E, q_sumzero(t, A));
        for (const auto& v : p_project(Z)) keep = std::max(keep, std::abs(v) / A.max_abs());
      }
    }
  o.detail << "max |P Q A| = " << pq << "; max |P vartheta - 1| = " << pth << "; U semigroup defect = " << semi
           << "; max |P U Q A| = " << keep;
  o.require(pq <= 1e-10, "P Q = 0");
  o.require(pth <= 1e-10, "P vartheta = 1");
  o.require(semi <= 1e-10, "U semigroup");
  o.require(keep <= 1e-10, "U preserves sum-zero");
  return o;
}

const char* kQdiffConfig = "W = 8\nL = 4\nE = 0\neta = 0.1\nn_samples = 200\nseed = 2025\n";

Outcome c6_qdiff() { return run_and_check(config("qdiff", kQdiffConfig)); }
Outcome c7_local_law() { return run_and_check(config("local-law", kQdiffConfig)); }

Outcome c8_deloc() {
  return run_and_check(config("deloc", "W = 8\nL = 4\nkappa = 0.5\nn_samples = 100\nseed = 808\n"));
}

Outcome c9_universality() {
  Outcome o;
  const Report r = run_experiment(
      config("universality", "W = 8\nL = 4\nkappa = 0.5\nn_samples = 100\nseed = 909\nou_times = [0, 0.1, 1, 10]\n"));
  const double band = r.aggregate("band_mean_r").value, gue = r.aggregate("gue_mean_r").value,
               poi = r.aggregate("poisson_mean_r").value;
  o.detail << "n_used=" << r.n_used;
  report_aggregates(o, r);
  o.require(r.failures.empty(), "no failed samples");
  o.require(std::abs(band - gue) <= 0.01, "|band - GUE| <= 0.01");
  o.require(r.aggregate("band_gaps").pass && r.aggregate("gue_gaps").pass, ">= 1e4 gaps each");
  o.require(std::abs(poi - band) >= 0.15 && std::abs(poi - gue) >= 0.15, "Poisson separation");
  return o;
}

Outcome c10_decay() {
  return run_and_check(config("decay", "W = 8\nL = 8\nE = 0\nt = 0.5\nD = 6\nn_samples = 200\nseed = 1010\n"));
}

Outcome c11_clt() {
  return run_and_check(
      config("clt", "W = 8\nL = 8\nE = 0\neta = 0.1\nn_samples = 400\nseed = 1111\nprecision = \"f32\"\n"));
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[e.path().filename().string()] = ss.str();
  }
  return files;
}

Outcome c12_reproducibility() {
  Outcome o;
  const std::vector<std::pair<std::string, std::string>> tiny = {
      {"theta", "L = 5\nxi_re = 0.6\nxi_im = 0.2\n"},
      {"kloop", "W = 2\nL = 3\nE = 0.2\nt = 0.4\nsigma = \"++-\"\n"},
      {"ward", "W = 2\nL = 3\nE = 0.1\nt = 0.5\nn_samples = 5\nseed = 12\n"},
      {"local-law", "W = 2\nL = 3\nE = 0\neta = 0.2\nn_samples = 5\nseed = 12\n"},
      {"qdiff", "W = 2\nL = 3\nE = 0\neta = 0.2\nn_samples = 5\nseed = 12\n"},
      {"deloc", "W = 2\nL = 4\nn_samples = 5\nseed = 12\n"},
      {"que", "W = 2\nL = 4\nn_samples = 5\nseed = 12\nblocks = [[0, 0], [1, 2]]\n"},
      {"universality", "W = 2\nL = 4\nn_samples = 5\nseed = 12\n"},
      {"decay", "W = 2\nL = 4\nE = 0\nt = 0.5\nn_samples = 5\nseed = 12\n"},
      {"clt", "W = 2\nL = 4\nE = 0\neta = 0.2\nn_samples = 5\nseed = 12\nprecision = \"f32\"\n"},
  };
  const auto root = std::filesystem::temp_directory_path() / "bandlab_acceptance_repro";
  std::filesystem::remove_all(root);
  std::size_t files = 0;
  for (const auto& [name, text] : tiny) {
    ExperimentConfig c = parse_config(name, text);
    std::vector<std::map<std::string, std::string>> runs;
    for (unsigned w : {1u, 3u, 1u}) {
      c.workers = w;
      const auto dir = root / (name + "_" + std::to_string(runs.size()));
      emit_report(run_experiment(c), dir);
      runs.push_back(read_dir(dir));
    }
    files += runs[0].size();
    o.require(runs[0] == runs[1], name + " differs between 1 and 3 workers");
    o.require(runs[0] == runs[2], name + " differs between reruns");
  }
  std::filesystem::remove_all(root);
  o.detail << "10 experiments, " << files << " files compared byte-for-byte across worker counts 1/3/1";
  return o;
}

Outcome que_extra() {
  return run_and_check(config("que", "W = 8\nL = 4\nE = 0\nwindow = 8\nn_samples = 100\nseed = 4040\n"));
}

struct Criterion {
  std::string id;
  std::string title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  use_single_threaded_blas();
  const std::vector<Criterion> all = {
      {"1", "propagator exactness", c1_propagator_exactness},
      {"2", "row-sum identity", c2_row_sums},
      {"3", "Ward identities", c3_ward},
      {"4", "primitive-loop oracle equivalence", c4_primitive_oracle},
      {"5", "sum-zero algebra", c5_sum_zero},
      {"6", "quantum diffusion", c6_qdiff},
      {"7", "local law", c7_local_law},
      {"8", "delocalization", c8_deloc},
      {"9", "universality proxy", c9_universality},
      {"10", "L-K decay", c10_decay},
      {"11", "CLT decorrelation", c11_clt},
      {"12", "reproducibility", c12_reproducibility},
      {"que", "QUE versus GUE", que_extra},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %s (%s): %s  %.1fs  %s\n", c.id.c_str(), c.title.c_str(), o.pass ? "PASS" : "FAIL", secs,
                o.detail.str().c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}

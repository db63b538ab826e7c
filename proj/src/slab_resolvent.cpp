#include "bandlab/slab_resolvent.hpp"

#include <stdexcept>

namespace bandlab {

namespace {

template <class T>
struct SlabChain {
  using S = std::complex<T>;
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Blocks = std::vector<Mat>;

  int L = 0;
  Eigen::Index w2 = 0;
  Eigen::Index m = 0;
  std::vector<std::vector<Eigen::Index>> idx;  // global sites of each slab, grouped by block
  std::vector<Mat> D;                          // diagonal slab blocks
  std::vector<Blocks> up, down;                // A_{s,s+1} and A_{s,s-1}, one W^2 block per a2

  SlabChain(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale)
      : L(geom.L()),
        w2(static_cast<Eigen::Index>(geom.block_size())),
        m(static_cast<Eigen::Index>(geom.block_size()) * geom.L()) {
    if (static_cast<std::size_t>(H.rows()) != geom.N() || H.cols() != H.rows())
      throw std::invalid_argument("slab resolvent: matrix does not match geometry");
    idx.resize(L);
    for (int s = 0; s < L; ++s)
      for (int a2 = 0; a2 < L; ++a2)
        for (std::size_t x : block_site_indices({s, a2}, geom)) idx[s].push_back(static_cast<Eigen::Index>(x));

    const S zs(static_cast<T>(z.real()), static_cast<T>(z.imag()));
    D.resize(L);
    up.resize(L);
    down.resize(L);
    for (int s = 0; s < L; ++s) {
      D[s] = gather(H, idx[s], idx[s], scale);
      D[s].diagonal().array() -= zs;
      const int sp = wrap(s + 1, L), sm = wrap(s - 1, L);
      for (int a2 = 0; a2 < L; ++a2) {
        up[s].push_back(gather_block(H, s, sp, a2, scale));
        down[s].push_back(gather_block(H, s, sm, a2, scale));
      }
    }
  }

  Mat gather(const CMatrix& H, const std::vector<Eigen::Index>& rows, const std::vector<Eigen::Index>& cols,
             double scale) const {
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const cplx v = scale * H(rows[i], cols[j]);
        out(i, j) = S(static_cast<T>(v.real()), static_cast<T>(v.imag()));
      }
    return out;
  }

  Mat gather_block(const CMatrix& H, int s, int t, int a2, double scale) const {
    const std::vector<Eigen::Index> r(idx[s].begin() + a2 * w2, idx[s].begin() + (a2 + 1) * w2);
    const std::vector<Eigen::Index> c(idx[t].begin() + a2 * w2, idx[t].begin() + (a2 + 1) * w2);
    return gather(H, r, c, scale);
  }

  // A X for block diagonal A.
  Mat lmul(const Blocks& A, const Mat& X) const {
    Mat Y(m, X.cols());
    for (int r = 0; r < L; ++r) Y.middleRows(r * w2, w2).noalias() = A[r] * X.middleRows(r * w2, w2);
    return Y;
  }
  // X A for block diagonal A.
  Mat rmul(const Mat& X, const Blocks& A) const {
    Mat Y(X.rows(), m);
    for (int r = 0; r < L; ++r) Y.middleCols(r * w2, w2).noalias() = X.middleCols(r * w2, w2) * A[r];
    return Y;
  }
  static Mat inverse(Mat a) {
    invert_in_place(a);
    return a;
  }

  // Chain position j = 1..n is slab j, n = L-1.
  std::vector<Mat> gL, gR, V, U;
  std::vector<Mat> schurL;  // D_j minus the left Schur term, kept for the diagonal
  Mat G00;

  void sweeps(bool need_right) {
    const int n = L - 1;
    gL.assign(L, Mat());
    gL[1] = inverse(D[1]);
    schurL.assign(L, Mat());
    for (int j = 2; j <= n; ++j) {
      schurL[j] = D[j] - lmul(down[j], rmul(gL[j - 1], up[j - 1]));
      gL[j] = inverse(schurL[j]);
    }
    if (need_right) {
      gR.assign(L, Mat());
      gR[n] = inverse(D[n]);
      for (int j = n - 1; j >= 1; --j) gR[j] = inverse(D[j] - lmul(up[j], rmul(gR[j + 1], down[j + 1])));
    }
  }

  // V = C^-1 Q with Q_1 = A_{1,0}, Q_n = A_{n,0}.
  void solve_columns() {
    const int n = L - 1;
    std::vector<Mat> y(L);
    y[1] = rmul(gL[1], down[1]);
    for (int j = 2; j <= n; ++j) y[j].noalias() = -(gL[j] * lmul(down[j], y[j - 1]));
    if (n == 1) y[1] += rmul(gL[1], up[1]);
    else y[n] += rmul(gL[n], up[n]);
    V.assign(L, Mat());
    V[n] = y[n];
    for (int j = n - 1; j >= 1; --j) {
      V[j] = y[j];
      V[j].noalias() -= gL[j] * lmul(up[j], V[j + 1]);
    }
  }

  // U = R C^-1 with R_1 = A_{0,1}, R_n = A_{0,n}.
  void solve_rows() {
    const int n = L - 1;
    std::vector<Mat> w(L);
    w[n] = lmul(down[0], gR[n]);
    for (int j = n - 1; j >= 1; --j) w[j].noalias() = -(rmul(w[j + 1], down[j + 1]) * gR[j]);
    w[1] += lmul(up[0], gR[1]);
    U.assign(L, Mat());
    U[1] = w[1];
    for (int j = 2; j <= n; ++j) {
      U[j] = w[j];
      U[j].noalias() -= rmul(U[j - 1], up[j - 1]) * gR[j];
    }
  }

  void corner() {
    const int n = L - 1;
    G00 = inverse(D[0] - lmul(up[0], V[1]) - lmul(down[0], V[n]));
  }
};

template <class T>
SlabColumns columns_impl(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale) {
  SlabChain<T> c(H, geom, z, scale);
  c.sweeps(false);
  c.solve_columns();
  c.corner();
  SlabColumns out;
  out.G.resize(H.rows(), c.m);
  for (Eigen::Index x : c.idx[0]) out.sites.push_back(static_cast<std::size_t>(x));
  auto scatter = [&](int s, const typename SlabChain<T>::Mat& blk) {
    for (Eigen::Index j = 0; j < c.m; ++j)
      for (Eigen::Index i = 0; i < c.m; ++i) out.G(c.idx[s][i], j) = cplx(blk(i, j).real(), blk(i, j).imag());
  };
  scatter(0, c.G00);
  for (int j = 1; j < c.L; ++j) {
    typename SlabChain<T>::Mat g = -(c.V[j] * c.G00);
    scatter(j, g);
  }
  return out;
}

template <class T>
CVector diagonal_impl(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale) {
  using Mat = typename SlabChain<T>::Mat;
  SlabChain<T> c(H, geom, z, scale);
  c.sweeps(true);
  c.solve_columns();
  c.solve_rows();
  c.corner();
  const int n = c.L - 1;
  CVector out(H.rows());
  auto store = [&](int s, Eigen::Index i, std::complex<T> v) { out(c.idx[s][i]) = cplx(v.real(), v.imag()); };
  for (Eigen::Index i = 0; i < c.m; ++i) store(0, i, c.G00(i, i));
  for (int j = 1; j <= n; ++j) {
    Mat cjj;
    if (j == 1) {
      cjj = c.gR[1];
    } else if (j == n) {
      cjj = c.gL[n];
    } else {
      cjj = c.inverse(c.schurL[j] - c.lmul(c.up[j], c.rmul(c.gR[j + 1], c.down[j + 1])));
    }
    const Mat P = c.V[j] * c.G00;
    for (Eigen::Index i = 0; i < c.m; ++i) store(j, i, cjj(i, i) + P.row(i).transpose().cwiseProduct(c.U[j].col(i)).sum());
  }
  return out;
}

}  // namespace

SlabColumns slab_zero_columns(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale,
                              Precision precision) {
  return precision == Precision::f32 ? columns_impl<float>(H, geom, z, scale)
                                     : columns_impl<double>(H, geom, z, scale);
}

CVector slab_diagonal(const CMatrix& H, const BlockGeometry& geom, cplx z, double scale, Precision precision) {
  return precision == Precision::f32 ? diagonal_impl<float>(H, geom, z, scale)
                                     : diagonal_impl<double>(H, geom, z, scale);
}

}  // namespace bandlab

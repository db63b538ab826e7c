#include "bandlab/linalg.hpp"

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <stdexcept>
#include <string>
#include <vector>

extern "C" void openblas_set_num_threads(int);

namespace bandlab {

void use_single_threaded_blas() { openblas_set_num_threads(1); }

void hermitian_eigen(const CMatrix& h, bool want_vectors, RVector& values, CMatrix& vectors) {
  const auto n = static_cast<lapack_int>(h.rows());
  if (h.cols() != h.rows()) throw std::invalid_argument("hermitian_eigen: matrix must be square");
  CMatrix work = h;
  values.resize(n);
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n,
                                         work.data(), n, values.data());
  if (info != 0) throw std::runtime_error("zheevd failed with info = " + std::to_string(info));
  if (want_vectors)
    vectors = std::move(work);
  else
    vectors.resize(0, 0);
}

void invert_in_place(CMatrix& a) {
  const auto n = static_cast<lapack_int>(a.rows());
  std::vector<lapack_int> piv(n);
  lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, a.data(), n, piv.data());
  if (info != 0) throw std::runtime_error("zgetrf failed with info = " + std::to_string(info));
  info = LAPACKE_zgetri(LAPACK_COL_MAJOR, n, a.data(), n, piv.data());
  if (info != 0) throw std::runtime_error("zgetri failed with info = " + std::to_string(info));
}

void invert_in_place(Eigen::MatrixXcf& a) {
  const auto n = static_cast<lapack_int>(a.rows());
  std::vector<lapack_int> piv(n);
  lapack_int info = LAPACKE_cgetrf(LAPACK_COL_MAJOR, n, n, a.data(), n, piv.data());
  if (info != 0) throw std::runtime_error("cgetrf failed with info = " + std::to_string(info));
  info = LAPACKE_cgetri(LAPACK_COL_MAJOR, n, a.data(), n, piv.data());
  if (info != 0) throw std::runtime_error("cgetri failed with info = " + std::to_string(info));
}

CMatrix shifted_inverse(const CMatrix& h, double scale, cplx z) {
  CMatrix a = scale * h;
  a.diagonal().array() -= z;
  invert_in_place(a);
  return a;
}

}  // namespace bandlab

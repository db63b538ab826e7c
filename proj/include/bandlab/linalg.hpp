#pragma once

// Dense complex linear algebra on top of LAPACKE / OpenBLAS.

#include <Eigen/Dense>
#include <complex>

namespace bandlab {

using cplx = std::complex<double>;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using RVector = Eigen::VectorXd;

/// Pins the BLAS backend to one thread. Parallelism lives at the sample level.
void use_single_threaded_blas();

/// Eigenvalues (ascending) and, when requested, orthonormal eigenvectors of a
/// Hermitian matrix. Only the lower triangle of h is read.
/// Throws std::runtime_error if the solver does not converge.
void hermitian_eigen(const CMatrix& h, bool want_vectors, RVector& values, CMatrix& vectors);

/// (scale*h - z)^-1 by LU factorisation.
CMatrix shifted_inverse(const CMatrix& h, double scale, cplx z);

/// In-place inverse of a general square matrix. Throws on singularity.
void invert_in_place(CMatrix& a);
void invert_in_place(Eigen::MatrixXcf& a);

}  // namespace bandlab

#ifndef SEMISTATIC_NUMERIC_DETAIL_HPP
#define SEMISTATIC_NUMERIC_DETAIL_HPP

#include "semistatic/types.hpp"

namespace semistatic::detail {

// Orthonormal basis of the column space of A (rank-revealing, thin).
inline Matrix column_space_basis(const Matrix& A, double threshold = 1e-12) {
    if (A.cols() == 0 || A.rows() == 0) return Matrix::Zero(A.rows(), 0);
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    qr.setThreshold(threshold);
    const int rank = static_cast<int>(qr.rank());
    if (rank == 0) return Matrix::Zero(A.rows(), 0);
    Matrix Q = qr.householderQ() * Matrix::Identity(A.rows(), rank);
    return Q;
}

// Basis of the kernel of A; zero-width matrix when trivial.
inline Matrix kernel_basis(const Matrix& A, double threshold = 1e-10) {
    if (A.cols() == 0) return Matrix::Zero(0, 0);
    if (A.rows() == 0) return Matrix::Identity(A.cols(), A.cols());
    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(threshold);
    if (lu.dimensionOfKernel() == 0) return Matrix::Zero(A.cols(), 0);
    return lu.kernel();
}

} // namespace semistatic::detail

#endif

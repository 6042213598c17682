#pragma once

// Thin wrappers around the LAPACK symmetric eigensolvers used by the
// Dirichlet basis builder.  Inputs are dense symmetric matrices in Eigen's
// default (column-major) storage; only the lowest eigenpairs are requested.

#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "snse/errors.hpp"

namespace snse {

struct EigenPairs {
    Eigen::VectorXd values;  ///< ascending
    Eigen::MatrixXd vectors; ///< one column per eigenvalue
};

/// Lowest `nev` eigenpairs of the symmetric-definite pencil A x = lambda B x.
/// A must be symmetric and B symmetric positive definite; both are copied.
/// Eigenvectors come back B-orthonormal (Z^T B Z = I).
inline EigenPairs lowest_eigenpairs_pencil(Eigen::MatrixXd A, Eigen::MatrixXd B, int nev) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    require_contract(A.rows() == A.cols() && B.rows() == B.cols() && A.rows() == B.rows(),
                     "pencil eigensolve: A and B must be square with equal size");
    require_contract(nev >= 1 && nev <= n, "pencil eigensolve: need 1 <= nev <= n");

    EigenPairs out;
    out.values.resize(nev);
    out.vectors.resize(n, nev);
    std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
    lapack_int found = 0;
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    const lapack_int info = LAPACKE_dsygvx(
        LAPACK_COL_MAJOR, 1, 'V', 'I', 'U', n, A.data(), n, B.data(), n,
        0.0, 0.0, 1, nev, abstol, &found, out.values.data(), out.vectors.data(), n,
        ifail.data());
    require_numeric(info == 0, "dsygvx failed with info=" + std::to_string(info));
    require_numeric(found == nev, "dsygvx converged " + std::to_string(found) + " of " +
                                      std::to_string(nev) + " eigenpairs");
    return out;
}

/// Lowest `nev` eigenpairs of a symmetric matrix (standard problem).
inline EigenPairs lowest_eigenpairs(Eigen::MatrixXd A, int nev) {
    const lapack_int n = static_cast<lapack_int>(A.rows());
    require_contract(A.rows() == A.cols(), "eigensolve: A must be square");
    require_contract(nev >= 1 && nev <= n, "eigensolve: need 1 <= nev <= n");

    EigenPairs out;
    out.values.resize(nev);
    out.vectors.resize(n, nev);
    std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
    lapack_int found = 0;
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    const lapack_int info = LAPACKE_dsyevx(
        LAPACK_COL_MAJOR, 'V', 'I', 'U', n, A.data(), n, 0.0, 0.0, 1, nev, abstol,
        &found, out.values.data(), out.vectors.data(), n, ifail.data());
    require_numeric(info == 0, "dsyevx failed with info=" + std::to_string(info));
    require_numeric(found == nev, "dsyevx converged " + std::to_string(found) + " of " +
                                      std::to_string(nev) + " eigenpairs");
    return out;
}

} // namespace snse

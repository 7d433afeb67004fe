#pragma once

#include "softsensor/types.hpp"

namespace softsensor {

/// Spectral decomposition of a symmetric matrix, eigenvalues descending.
struct SymEigen {
  Vector values;
  Matrix vectors;  ///< column k pairs with values[k]
};

/// Thin singular value decomposition, singular values descending.
struct Svd {
  Vector values;
  Matrix u;
  Matrix v;
};

/// Throws InvalidArgument on asymmetric (beyond 1e-10) or non-finite input.
SymEigen eigh(const Matrix& s);

Svd svd(const Matrix& a);

/// Least-squares minimizer of |b - A x|; the minimum-norm one when A is
/// rank deficient.
Vector solve_ls(const Matrix& a, const Vector& b);

bool all_finite(const Matrix& m);

}  // namespace softsensor

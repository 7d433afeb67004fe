#include "softsensor/linalg.hpp"

#include <cmath>

#include "softsensor/error.hpp"

namespace softsensor {

namespace {

// Flip each column so its largest-magnitude entry is positive; keeps
// decompositions reproducible across calls.
void fix_signs(Matrix& vectors, Matrix* partner = nullptr) {
  for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
    Eigen::Index arg = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&arg);
    if (vectors(arg, k) < 0) {
      vectors.col(k) *= -1.0;
      if (partner != nullptr && k < partner->cols()) partner->col(k) *= -1.0;
    }
  }
}

}  // namespace

bool all_finite(const Matrix& m) { return m.allFinite(); }

SymEigen eigh(const Matrix& s) {
  if (s.rows() != s.cols()) throw InvalidArgument("eigh: matrix is not square");
  if (!s.allFinite()) throw InvalidArgument("eigh: non-finite entries");
  if (s.size() > 0 && (s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("eigh: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) throw DataError("eigh: decomposition failed");
  SymEigen out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  fix_signs(out.vectors);
  return out;
}

Svd svd(const Matrix& a) {
  if (!a.allFinite()) throw InvalidArgument("svd: non-finite entries");
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd out;
  out.values = solver.singularValues();
  out.u = solver.matrixU();
  out.v = solver.matrixV();
  fix_signs(out.v, &out.u);
  return out;
}

Vector solve_ls(const Matrix& a, const Vector& b) {
  if (a.cols() < 1) throw InvalidArgument("solve_ls: no columns");
  if (a.rows() != b.size()) throw InvalidArgument("solve_ls: row count mismatch");
  if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("solve_ls: non-finite entries");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
  return cod.solve(b);
}

}  // namespace softsensor

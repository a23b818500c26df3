#pragma once

// Dense complex linear algebra used by the oracle. Everything here is a free
// function template over Eigen expressions so the scalar type stays open.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace iqm {

using Index = Eigen::Index;

template <typename Scalar>
using CVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using CMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Complex = std::complex<double>;
using VectorXc = CVector<double>;
using MatrixXc = CMatrix<double>;
using VectorXr = RVector<double>;
using MatrixXr = RMatrix<double>;

inline constexpr Index kMaxDimension = 64;

template <typename Derived>
typename Derived::RealScalar max_abs_entry(const Eigen::MatrixBase<Derived>& m) {
  if (m.size() == 0) return 0;
  return m.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& m, typename Derived::RealScalar tol) {
  return m.rows() == m.cols() && max_abs_entry(m - m.adjoint()) <= tol;
}

template <typename DerivedA, typename DerivedB>
auto commutator(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a * b - b * a).eval();
}

/// Product of the factor dimensions; the dimension of the joint space.
inline Index total_dimension(std::span<const Index> factors) {
  Index d = 1;
  for (Index f : factors) d *= f;
  return d;
}

/// I ⊗ … ⊗ local ⊗ … ⊗ I with `local` acting on factor `k`.
template <typename Scalar>
CMatrix<Scalar> lift_to_factor(const CMatrix<Scalar>& local, std::span<const Index> factors,
                               std::size_t k) {
  const Index left = total_dimension(factors.subspan(0, k));
  const Index right = total_dimension(factors.subspan(k + 1));
  const CMatrix<Scalar> id_left = CMatrix<Scalar>::Identity(left, left);
  const CMatrix<Scalar> id_right = CMatrix<Scalar>::Identity(right, right);
  CMatrix<Scalar> partial = Eigen::kroneckerProduct(id_left, local).eval();
  return Eigen::kroneckerProduct(partial, id_right).eval();
}

/// exp(-i·h·t) for Hermitian h, through its spectral decomposition.
template <typename Scalar>
CMatrix<Scalar> hermitian_propagator(const CMatrix<Scalar>& h, Scalar t) {
  if (t == Scalar(0)) return CMatrix<Scalar>::Identity(h.rows(), h.cols());
  Eigen::SelfAdjointEigenSolver<CMatrix<Scalar>> solver(h);
  const CVector<Scalar> phases =
      (solver.eigenvalues() * (-t)).unaryExpr([](Scalar a) { return std::polar(Scalar(1), a); });
  return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

/// Rows of doubles → dense real matrix.
inline MatrixXr to_real_matrix(const std::vector<std::vector<double>>& rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r == 0 ? 0 : static_cast<Index>(rows.front().size());
  MatrixXr m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(j));
  return m;
}

inline MatrixXc to_complex_matrix(const std::vector<std::vector<Complex>>& rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r == 0 ? 0 : static_cast<Index>(rows.front().size());
  MatrixXc m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)].at(static_cast<std::size_t>(j));
  return m;
}

}  // namespace iqm

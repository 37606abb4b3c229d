#pragma once

// Dense linear-algebra kernels shared by the rest of the library: SVD-based
// rank/pseudoinverse/projector utilities, eigenvalues, the discrete Lyapunov
// and Riccati solvers and the orthogonal controllability staircase.
//
// Everything here is a pure function on Eigen dense types. Matrices are small
// (tens of rows) so clarity wins over blocking or in-place tricks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ddc/error.hpp"

namespace ddc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Default relative rank tolerance. Noise-free data gives sharp gaps.
inline constexpr double kDefaultRankTol = 1e-8;

inline void require_finite(const Matrix& a, const std::string& what) {
  if (!a.allFinite()) throw InvalidInput(what + " contains non-finite entries");
}

inline void require_square(const Matrix& a, const std::string& what) {
  if (a.rows() != a.cols()) {
    throw InvalidInput(what + " must be square, got " + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()));
  }
}

[[nodiscard]] inline bool is_symmetric(const Matrix& a, double tol_rel = 1e-10) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.norm());
  return (a - a.transpose()).norm() <= tol_rel * scale;
}

[[nodiscard]] inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Smallest eigenvalue of a symmetric matrix; +inf for an empty matrix.
[[nodiscard]] inline double min_symmetric_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Minimum eigenvalue of the symmetric block matrix [[top, lowerᵀ], [lower, bottom]].
[[nodiscard]] inline double block_min_eigenvalue(const Matrix& top, const Matrix& lower,
                                                 const Matrix& bottom) {
  const Eigen::Index n1 = top.rows();
  const Eigen::Index n2 = bottom.rows();
  Matrix blk(n1 + n2, n1 + n2);
  blk.topLeftCorner(n1, n1) = top;
  blk.topRightCorner(n1, n2) = lower.transpose();
  blk.bottomLeftCorner(n2, n1) = lower;
  blk.bottomRightCorner(n2, n2) = bottom;
  return min_symmetric_eigenvalue(blk);
}

// ---------------------------------------------------------------------------
// SVD and friends
// ---------------------------------------------------------------------------

struct SvdResult {
  Matrix left_vectors;    // orthonormal columns
  Vector singular_values; // non-increasing, non-negative
  Matrix right_vectors;   // orthonormal columns
};

enum class SvdShape { Full, Thin };

/// Singular value decomposition. Full shape returns square U and V.
[[nodiscard]] inline SvdResult svd(const Matrix& a, SvdShape shape = SvdShape::Full) {
  require_finite(a, "svd input");
  const Eigen::Index k = std::min(a.rows(), a.cols());
  if (k == 0) {
    const Eigen::Index ur = shape == SvdShape::Full ? a.rows() : 0;
    const Eigen::Index vr = shape == SvdShape::Full ? a.cols() : 0;
    return {Matrix::Identity(a.rows(), ur), Vector(0), Matrix::Identity(a.cols(), vr)};
  }
  const unsigned opts = shape == SvdShape::Full ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                                                : (Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::JacobiSVD<Matrix> solver(a, opts);
  SvdResult out{solver.matrixU(), solver.singularValues(), solver.matrixV()};

  const Matrix recon = out.left_vectors.leftCols(k) * out.singular_values.asDiagonal() *
                       out.right_vectors.leftCols(k).transpose();
  const double residual = (a - recon).norm();
  if (!std::isfinite(residual) || residual > 1e-10 * std::max(1.0, a.norm())) {
    throw NumericalFailure("svd did not converge", residual);
  }
  return out;
}

/// Number of singular values strictly above tol_rel·σ₁.
[[nodiscard]] inline Eigen::Index numerical_rank(const Vector& sigma,
                                                 double tol_rel = kDefaultRankTol) {
  if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
  const double thr = tol_rel * sigma(0);
  Eigen::Index r = 0;
  while (r < sigma.size() && sigma(r) > thr) ++r;
  return r;
}

/// Moore-Penrose pseudoinverse through a truncated SVD.
[[nodiscard]] inline Matrix pinv(const Matrix& a, double tol_rel = kDefaultRankTol) {
  const SvdResult s = svd(a, SvdShape::Thin);
  const Eigen::Index r = numerical_rank(s.singular_values, tol_rel);
  Matrix out = Matrix::Zero(a.cols(), a.rows());
  if (r == 0) return out;
  const Vector inv = s.singular_values.head(r).cwiseInverse();
  out = s.right_vectors.leftCols(r) * inv.asDiagonal() * s.left_vectors.leftCols(r).transpose();
  return out;
}

/// Orthogonal projector onto ker(A), i.e. I − A†A.
[[nodiscard]] inline Matrix null_projector(const Matrix& a, double tol_rel = kDefaultRankTol) {
  const SvdResult s = svd(a, SvdShape::Full);
  const Eigen::Index r = numerical_rank(s.singular_values, tol_rel);
  const Matrix vr = s.right_vectors.leftCols(r);
  return Matrix::Identity(a.cols(), a.cols()) - vr * vr.transpose();
}

/// Orthonormal basis of the numerical column space of A.
[[nodiscard]] inline Matrix range_basis(const Matrix& a, double tol_rel = kDefaultRankTol) {
  const SvdResult s = svd(a, SvdShape::Thin);
  const Eigen::Index r = numerical_rank(s.singular_values, tol_rel);
  return s.left_vectors.leftCols(r);
}

// ---------------------------------------------------------------------------
// Eigenvalues
// ---------------------------------------------------------------------------

struct Spectrum {
  std::vector<Complex> eigenvalues;  // sorted by decreasing modulus
  double spectral_radius = 0.0;
};

[[nodiscard]] inline Spectrum eigenvalues(const Matrix& a) {
  require_square(a, "eigenvalue input");
  require_finite(a, "eigenvalue input");
  Spectrum out;
  if (a.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalFailure("eigenvalue QR iteration did not converge");
  const auto& ev = es.eigenvalues();
  out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::stable_sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](Complex x, Complex y) {
    if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
    if (x.real() != y.real()) return x.real() > y.real();
    return x.imag() > y.imag();
  });
  out.spectral_radius = std::abs(out.eigenvalues.front());
  return out;
}

[[nodiscard]] inline double spectral_radius(const Matrix& a) { return eigenvalues(a).spectral_radius; }

inline std::string format_eigenvalues(const std::vector<Complex>& ev) {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i) os << ", ";
    os << ev[i].real();
    if (ev[i].imag() != 0.0) os << (ev[i].imag() < 0 ? "-" : "+") << std::abs(ev[i].imag()) << 'i';
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Symmetric square roots
// ---------------------------------------------------------------------------

/// Principal square root of a symmetric positive semi-definite matrix.
/// Eigenvalues below −1e-10·max(1, λ_max) mean the input is indefinite.
[[nodiscard]] inline Matrix psd_sqrt(const Matrix& s) {
  require_square(s, "square-root input");
  if (s.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  Vector d = es.eigenvalues();
  const double floor = -1e-10 * std::max(1.0, d.cwiseAbs().maxCoeff());
  if (d.minCoeff() < floor) {
    throw NoSolution("matrix is not positive semi-definite (min eigenvalue " +
                     std::to_string(d.minCoeff()) + ")");
  }
  d = d.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

/// Inverse square root of a symmetric positive definite matrix.
[[nodiscard]] inline Matrix pd_inverse_sqrt(const Matrix& s) {
  require_square(s, "inverse square-root input");
  if (s.rows() == 0) return s;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  const Vector d = es.eigenvalues();
  if (!(d.minCoeff() > 0.0)) throw InvalidInput("matrix is not positive definite");
  return es.eigenvectors() * d.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------
// Discrete Lyapunov equation  AᵀMA − M + Q = 0
// ---------------------------------------------------------------------------

namespace detail {

// Kronecker-product solve without the positivity checks on Q; used where Q is
// only semi-definite (Riccati with B = 0).
[[nodiscard]] inline Matrix lyapunov_kron(const Matrix& a, const Matrix& q) {
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);
  const Eigen::Index n2 = n * n;
  Matrix at = a.transpose();
  Matrix sys(n2, n2);
  // vec(AᵀMA) = (Aᵀ ⊗ Aᵀ) vec(M) with column-major vec.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sys.block(i * n, j * n, n, n) = at(i, j) * at;
    }
  }
  sys -= Matrix::Identity(n2, n2);
  const Vector rhs = -Eigen::Map<const Vector>(q.data(), n2);
  Eigen::FullPivLU<Matrix> lu(sys);
  if (!lu.isInvertible()) throw NoSolution("Lyapunov operator is singular (eigenvalue pair on 1)");
  const Vector x = lu.solve(rhs);
  Matrix m = symmetrize(Eigen::Map<const Matrix>(x.data(), n, n));
  const double residual = (a.transpose() * m * a - m + q).norm();
  if (!std::isfinite(residual) || residual > 1e-8 * std::max(m.norm(), 1e-300)) {
    throw NumericalFailure("Lyapunov solve inaccurate", residual);
  }
  return m;
}

}  // namespace detail

/// Unique symmetric M > 0 with AᵀMA − M = −Q for Schur-stable A and Q > 0.
[[nodiscard]] inline Matrix solve_discrete_lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "Lyapunov A");
  require_finite(a, "Lyapunov A");
  require_finite(q, "Lyapunov Q");
  if (q.rows() != a.rows() || q.cols() != a.cols()) throw InvalidInput("Lyapunov Q shape mismatch");
  if (!is_symmetric(q)) throw InvalidInput("Lyapunov Q must be symmetric");
  if (a.rows() > 0 && !(min_symmetric_eigenvalue(q) > 0.0)) {
    throw InvalidInput("Lyapunov Q must be positive definite");
  }
  const Spectrum sp = eigenvalues(a);
  if (sp.spectral_radius >= 1.0) {
    throw NoSolution("no positive definite Lyapunov solution: spectral radius " +
                     std::to_string(sp.spectral_radius) + " >= 1");
  }
  return detail::lyapunov_kron(a, q);
}

// ---------------------------------------------------------------------------
// Orthogonal controllability staircase
// ---------------------------------------------------------------------------

/// Sᵀ A S = [[A11, A12], [0, A22]], Sᵀ B = [[B1], [0]] with (A11, B1) controllable.
struct StaircaseForm {
  Matrix S;                         // orthogonal
  Matrix A;                         // SᵀAS
  Matrix B;                         // SᵀB
  Eigen::Index controllable_dim = 0;
  std::vector<Eigen::Index> block_sizes;

  [[nodiscard]] Matrix a11() const { return A.topLeftCorner(controllable_dim, controllable_dim); }
  [[nodiscard]] Matrix a12() const {
    return A.topRightCorner(controllable_dim, A.cols() - controllable_dim);
  }
  [[nodiscard]] Matrix a21() const {
    return A.bottomLeftCorner(A.rows() - controllable_dim, controllable_dim);
  }
  [[nodiscard]] Matrix a22() const {
    const Eigen::Index u = A.rows() - controllable_dim;
    return A.bottomRightCorner(u, u);
  }
  [[nodiscard]] Matrix b_top() const { return B.topRows(controllable_dim); }
};

/// Iterated SVD range deflation. Rank decisions use the absolute threshold
/// tol_rel·max(‖A‖_F, ‖B‖_F).
[[nodiscard]] inline StaircaseForm controllability_staircase(const Matrix& a, const Matrix& b,
                                                             double tol_rel = kDefaultRankTol) {
  require_square(a, "staircase A");
  if (b.rows() != a.rows()) throw InvalidInput("staircase B row count must match A");
  require_finite(a, "staircase A");
  require_finite(b, "staircase B");

  const Eigen::Index n = a.rows();
  StaircaseForm out{Matrix::Identity(n, n), a, b, 0, {}};
  double thr = tol_rel * std::max(a.norm(), b.norm());
  if (thr == 0.0) thr = tol_rel;

  Eigen::Index offset = 0;
  Eigen::Index prev_offset = 0;
  Eigen::Index prev_size = 0;
  while (offset < n) {
    const Matrix sub = offset == 0 ? Matrix(out.B)
                                   : Matrix(out.A.block(offset, prev_offset, n - offset, prev_size));
    if (sub.cols() == 0) break;
    const SvdResult s = svd(sub, SvdShape::Full);
    Eigen::Index rank = 0;
    while (rank < s.singular_values.size() && s.singular_values(rank) > thr) ++rank;
    if (rank == 0) break;

    const Matrix& q = s.left_vectors;  // (n − offset) square
    const Eigen::Index rem = n - offset;
    out.A.bottomRows(rem) = q.transpose() * out.A.bottomRows(rem);
    out.A.rightCols(rem) = out.A.rightCols(rem) * q;
    out.B.bottomRows(rem) = q.transpose() * out.B.bottomRows(rem);
    out.S.rightCols(rem) = out.S.rightCols(rem) * q;

    out.block_sizes.push_back(rank);
    prev_offset = offset;
    prev_size = rank;
    offset += rank;
  }
  out.controllable_dim = offset;
  return out;
}

// ---------------------------------------------------------------------------
// Discrete algebraic Riccati equation
// ---------------------------------------------------------------------------

struct DareSolution {
  Matrix P;  // stabilizing solution
  Matrix K;  // closed loop is A + BK
  int iterations = 0;
};

struct DareOptions {
  double tolerance = 1e-12;  // relative Frobenius change between doubling steps
  int max_iterations = 200;
  double rank_tol = kDefaultRankTol;
};

/// Stabilizing solution of P = AᵀPA − AᵀPB(R + BᵀPB)⁻¹BᵀPA + Q by the
/// structure-preserving doubling algorithm, with K = −(R + BᵀPB)⁻¹BᵀPA.
[[nodiscard]] inline DareSolution solve_dare_gain(const Matrix& a, const Matrix& b, const Matrix& q,
                                                  const Matrix& r, const DareOptions& opt = {}) {
  require_square(a, "DARE A");
  const Eigen::Index n = a.rows();
  const Eigen::Index m = b.cols();
  if (b.rows() != n) throw InvalidInput("DARE B row count must match A");
  if (q.rows() != n || q.cols() != n) throw InvalidInput("DARE Q shape mismatch");
  if (r.rows() != m || r.cols() != m) throw InvalidInput("DARE R shape mismatch");
  for (const auto* mat : {&a, &b, &q, &r}) require_finite(*mat, "DARE data");
  if (!is_symmetric(q) || !is_symmetric(r)) throw InvalidInput("DARE Q and R must be symmetric");
  if (n > 0 && min_symmetric_eigenvalue(q) < -1e-10 * std::max(1.0, q.norm())) {
    throw InvalidInput("DARE Q must be positive semi-definite");
  }
  if (m > 0 && !(min_symmetric_eigenvalue(r) > 0.0)) {
    throw InvalidInput("DARE R must be positive definite");
  }

  if (m == 0) {
    const double rho = spectral_radius(a);
    if (rho >= 1.0) {
      throw NoSolution("no input and A is not Schur stable (spectral radius " +
                       std::to_string(rho) + ")");
    }
    return {detail::lyapunov_kron(a, symmetrize(q)), Matrix(0, n), 0};
  }

  const StaircaseForm sc = controllability_staircase(a, b, opt.rank_tol);
  if (sc.controllable_dim < n) {
    const Spectrum un = eigenvalues(sc.a22());
    if (un.spectral_radius >= 1.0) {
      throw NoSolution("pair (A, B) is not stabilizable; uncontrollable eigenvalues " +
                       format_eigenvalues(un.eigenvalues));
    }
  }

  const Matrix eye = Matrix::Identity(n, n);
  Matrix ak = a;
  Matrix gk = symmetrize(b * r.ldlt().solve(b.transpose()));
  Matrix hk = symmetrize(q);
  int it = 0;
  double change = std::numeric_limits<double>::infinity();
  for (; it < opt.max_iterations; ++it) {
    Eigen::PartialPivLU<Matrix> lu(eye + gk * hk);
    const Matrix w_a = lu.solve(ak);
    const Matrix w_g = lu.solve(gk);
    const Matrix a_next = ak * w_a;
    const Matrix g_next = symmetrize(gk + ak * w_g * ak.transpose());
    const Matrix h_next = symmetrize(hk + ak.transpose() * hk * w_a);
    if (!h_next.allFinite()) throw NumericalFailure("Riccati doubling diverged", change);
    change = (h_next - hk).norm();
    ak = a_next;
    gk = g_next;
    hk = h_next;
    if (change <= opt.tolerance * std::max(1.0, hk.norm())) {
      ++it;
      break;
    }
  }
  if (!(change <= opt.tolerance * std::max(1.0, hk.norm()))) {
    throw NumericalFailure("Riccati doubling stalled", change);
  }

  const Matrix& p = hk;
  const Matrix s = r + b.transpose() * p * b;
  const Matrix k = -s.ldlt().solve(b.transpose() * p * a);
  const Matrix res = a.transpose() * p * a - p + a.transpose() * p * b * k + q;
  const double residual = res.norm();
  if (residual > 1e-8 * std::max(p.norm(), 1e-300)) {
    throw NumericalFailure("Riccati residual too large", residual);
  }
  const double rho = spectral_radius(a + b * k);
  if (!(rho < 1.0)) {
    throw NumericalFailure("Riccati gain does not stabilize (Q weighting not detectable?)", rho);
  }
  return {p, k, it};
}

}  // namespace ddc

#pragma once

// Parameterizer transition model and the stability / stabilizability tests
// built on it.
//
// Shifting a window by one step gives F_p·𝔤ₖ = Π_p·F·𝔤ₖ₋₁, where F_p holds the
// first L·w rows of F and Π_p drops the oldest sample. All solutions are
//
//   𝔤ₖ = A·𝔤ₖ₋₁ + F_z·zₖ,   A = F_p†·Π_p·F,   span(F_z) = ker(F_p),
//
// so z plays the role of a virtual input (dimension m once the data is
// persistently exciting).

#include <optional>
#include <vector>

#include "ddc/behavior.hpp"

namespace ddc {

struct TransitionModel {
  Matrix A;        // r × r
  Matrix Fz;       // r × m_z, orthonormal columns
  Matrix Fp;       // first L·w rows of F
  Matrix Fp_pinv;  // F_p†
  Matrix Pi_p;     // [0 I], L·w × (L+1)·w
  Matrix Pi_u;     // picks u_k out of w̃_k, m × (L+1)·w
  BehaviorBasis basis;

  [[nodiscard]] Eigen::Index rank() const noexcept { return A.rows(); }
  [[nodiscard]] Eigen::Index virtual_inputs() const noexcept { return Fz.cols(); }
  [[nodiscard]] bool has_basis() const noexcept { return basis.rank() > 0; }

  /// Model with only (A, Fz) populated; the control laws need a basis and
  /// reject it.
  static TransitionModel from_matrices(Matrix a, Matrix fz) {
    require_square(a, "transition A");
    if (fz.rows() != a.rows()) throw InvalidInput("Fz row count must match A");
    TransitionModel tm;
    tm.A = std::move(a);
    tm.Fz = std::move(fz);
    return tm;
  }
};

[[nodiscard]] inline TransitionModel build_transition(const BehaviorBasis& basis,
                                                      double tol_rel = kDefaultRankTol) {
  const Eigen::Index r = basis.rank();
  if (r == 0) throw InvalidInput("degenerate basis (rank 0)");
  const Eigen::Index w = basis.part.w();
  const Eigen::Index past = basis.L * w;
  const Eigen::Index full = basis.window_length();
  if (basis.F.rows() != full) throw InvalidInput("basis rows do not match (L+1)·w");

  TransitionModel tm;
  tm.basis = basis;
  tm.Pi_p = Matrix::Zero(past, full);
  tm.Pi_p.rightCols(past) = Matrix::Identity(past, past);
  tm.Pi_u = Matrix::Zero(basis.part.m, full);
  tm.Pi_u.middleCols(past, basis.part.m) = Matrix::Identity(basis.part.m, basis.part.m);

  tm.Fp = basis.F.topRows(past);
  tm.Fp_pinv = pinv(tm.Fp, tol_rel);
  tm.A = tm.Fp_pinv * (tm.Pi_p * basis.F);
  // Kernel of F_p from its own SVD; a relative rank test on the projector
  // I − F_p†F_p would read round-off as rank when the kernel is trivial.
  const SvdResult s = svd(tm.Fp, SvdShape::Full);
  const Eigen::Index kept = numerical_rank(s.singular_values, tol_rel);
  tm.Fz = s.right_vectors.rightCols(r - kept);
  return tm;
}

struct StabilityReport {
  Spectrum spectrum;
  bool stable = false;
  std::optional<Matrix> certificate_M;
  double lmi_min_eigenvalue = 0.0;  // of [[M, (MA)ᵀ], [MA, M]]; 0 without certificate
};

/// Lyapunov test for autonomous behaviors: stable iff ρ(A) < 1, certified by
/// M solving AᵀMA − M = −I.
[[nodiscard]] inline StabilityReport autonomous_stability(const TransitionModel& tm) {
  if (tm.virtual_inputs() != 0) {
    throw InvalidInput("system not autonomous: " + std::to_string(tm.virtual_inputs()) +
                       " free directions in the transition");
  }
  StabilityReport rep;
  rep.spectrum = eigenvalues(tm.A);
  rep.stable = rep.spectrum.spectral_radius < 1.0;
  if (rep.stable) {
    const Eigen::Index r = tm.rank();
    Matrix m = solve_discrete_lyapunov(tm.A, Matrix::Identity(r, r));
    rep.lmi_min_eigenvalue = block_min_eigenvalue(m, m * tm.A, m);
    rep.certificate_M = std::move(m);
  }
  return rep;
}

struct StaircaseDecomposition {
  Matrix S;
  Matrix A11, A12, A21, A22;
  Matrix B_top;
  Eigen::Index controllable_dim = 0;
};

[[nodiscard]] inline StaircaseDecomposition staircase(const TransitionModel& tm,
                                                      double tol_rel = kDefaultRankTol) {
  const StaircaseForm f = controllability_staircase(tm.A, tm.Fz, tol_rel);
  return {f.S, f.a11(), f.a12(), f.a21(), f.a22(), f.b_top(), f.controllable_dim};
}

struct StabilizabilityReport {
  bool stabilizable = false;
  Eigen::Index controllable_dim = 0;
  std::vector<Complex> uncontrollable_eigs;
};

/// Stabilizable iff the uncontrollable block A22 is empty or Schur stable.
[[nodiscard]] inline StabilizabilityReport stabilizable(const TransitionModel& tm,
                                                        double tol_rel = kDefaultRankTol) {
  const StaircaseDecomposition sd = staircase(tm, tol_rel);
  const Spectrum un = eigenvalues(sd.A22);
  return {sd.A22.rows() == 0 || un.spectral_radius < 1.0, sd.controllable_dim, un.eigenvalues};
}

}  // namespace ddc

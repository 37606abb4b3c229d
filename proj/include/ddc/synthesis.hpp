#pragma once

// Stabilizing controller synthesis on the parameterizer.
//
// The certificate is a pair W = Wᵀ > 0, Y with
//
//   [[W, (AW + F_zY)ᵀ], [AW + F_zY, W]] > 0,
//
// which makes V(𝔤) = ‖𝔤‖²_M, M = W⁻¹, a Lyapunov function of the closed loop
// 𝔤ₖ = (A + F_z·Y·W⁻¹)·𝔤ₖ₋₁. Instead of handing the LMI to an SDP solver the
// pair is built constructively: a Riccati gain K stabilizes (A, F_z), M solves
// the closed-loop Lyapunov equation with identity right-hand side, W = M⁻¹ and
// Y = K·W. The LMI is then checked numerically.
//
// Expanding the Lyapunov decrease for the free virtual input z,
//
//   ‖𝔤‖²_M − ‖A𝔤 + F_z z‖²_M
//     = 𝔤ᵀ(M − AᵀMA)𝔤 + 2𝔤ᵀ(−AᵀMF_z)z − zᵀ(F_zᵀMF_z)z,
//
// gives the quadratic form v₁ᵀQv₁ + 2v₁ᵀSv₂ − v₂ᵀRv₂ with v₁ = 𝔤, v₂ = z and
// (Q, S, R) = (M − AᵀMA, −AᵀMF_z, F_zᵀMF_z). Every gain keeping that form
// non-negative is R^{-1/2}·U·(Q + SR⁻¹Sᵀ)^{1/2} + R⁻¹Sᵀ for a contraction U;
// `stabilizing_gain_family` exposes that family.

#include <cmath>

#include "ddc/analysis.hpp"

namespace ddc {

struct SynthesisOptions {
  Matrix state_weight;      // Riccati Q on 𝔤; empty means identity
  Matrix input_weight;      // Riccati R on z; empty means identity
  double decay_rate = 1.0;  // ρ(A_cl) < decay_rate when < 1
  double tol_rel = kDefaultRankTol;
  DareOptions dare{};
};

/// Weight on the newest sample of the window: 𝔤ᵀQ𝔤 = input·‖u_k‖² + output·‖y_k‖².
[[nodiscard]] inline Matrix newest_sample_weight(const TransitionModel& tm, double input,
                                                 double output) {
  if (!tm.has_basis()) throw InvalidInput("newest-sample weight needs a data-built model");
  const BehaviorBasis& b = tm.basis;
  const Eigen::Index w = b.part.w();
  const Matrix newest = b.F.bottomRows(w);
  Vector d(w);
  d.head(b.part.m).setConstant(input);
  d.tail(b.part.p).setConstant(output);
  return symmetrize(newest.transpose() * d.asDiagonal() * newest);
}

struct Controller {
  Matrix W;     // r × r, symmetric positive definite
  Matrix Y;     // m_z × r
  Matrix M;     // W⁻¹
  Matrix K;     // Y·W⁻¹
  Matrix A_cl;  // A + F_z·K
  TransitionModel tm;

  Matrix state_gain;       // u_k = state_gain·𝔤ₖ₋₁
  Matrix trajectory_gain;  // u_k = trajectory_gain·w̃ₖ₋₁

  [[nodiscard]] Eigen::Index rank() const noexcept { return A_cl.rows(); }
  [[nodiscard]] Eigen::Index inputs() const noexcept { return tm.basis.part.m; }
};

/// Minimum eigenvalue of the synthesis LMI block; positive iff (W, Y) certify
/// stability.
[[nodiscard]] inline double verify_lmi(const Controller& c) {
  const Matrix lower = c.tm.A * c.W + c.tm.Fz * c.Y;
  return block_min_eigenvalue(c.W, lower, c.W);
}

namespace detail {

inline void fill_laws(Controller& c) {
  if (!c.tm.has_basis()) return;
  const Matrix& f = c.tm.basis.F;
  c.state_gain = c.tm.Pi_u * f * c.A_cl;
  c.trajectory_gain =
      c.tm.Pi_u * f * (c.tm.Fp_pinv * c.tm.Pi_p + c.tm.Fz * (c.Y * c.M) * f.transpose());
}

}  // namespace detail

/// Builds the certificate from a Riccati gain. Throws NoSolution when (A, F_z)
/// is not stabilizable.
[[nodiscard]] inline Controller synthesize(const TransitionModel& tm,
                                           const SynthesisOptions& opt = {}) {
  const Eigen::Index r = tm.rank();
  const Eigen::Index mz = tm.virtual_inputs();
  if (mz == 0) throw InvalidInput("nothing to control: the behavior has no free virtual input");
  if (!(opt.decay_rate > 0.0 && opt.decay_rate <= 1.0)) {
    throw InvalidInput("decay rate must lie in (0, 1]");
  }

  const StabilizabilityReport st = stabilizable(tm, opt.tol_rel);
  if (!st.stabilizable) {
    throw NoSolution("behavior is not stabilizable; uncontrollable eigenvalues " +
                     format_eigenvalues(st.uncontrollable_eigs));
  }

  const Matrix q = opt.state_weight.size() ? opt.state_weight : Matrix(Matrix::Identity(r, r));
  const Matrix rw = opt.input_weight.size() ? opt.input_weight : Matrix(Matrix::Identity(mz, mz));
  const double alpha = opt.decay_rate;
  const DareSolution dare = solve_dare_gain(tm.A / alpha, tm.Fz / alpha, q, rw, opt.dare);

  Controller c;
  c.tm = tm;
  c.K = dare.K;
  c.A_cl = tm.A + tm.Fz * c.K;
  c.M = solve_discrete_lyapunov(c.A_cl, Matrix::Identity(r, r));
  c.W = symmetrize(c.M.ldlt().solve(Matrix::Identity(r, r)));
  c.Y = c.K * c.W;

  const double lmi = verify_lmi(c);
  if (!(lmi > 0.0)) throw NumericalFailure("synthesis LMI check failed, min eigenvalue", lmi);
  detail::fill_laws(c);
  return c;
}

namespace detail {
inline void require_laws(const Controller& c) {
  if (c.trajectory_gain.size() == 0 && c.tm.basis.part.m > 0) {
    throw InvalidInput("controller has no behavior basis; control laws unavailable");
  }
}
}  // namespace detail

/// u_k = Π_u·F·(A + F_z·Y·W⁻¹)·𝔤ₖ₋₁.
[[nodiscard]] inline Vector control_from_parameterizer(const Controller& c,
                                                       const Parameterizer& g_prev) {
  detail::require_laws(c);
  if (g_prev.g.size() != c.rank()) {
    throw InvalidInput("parameterizer length " + std::to_string(g_prev.g.size()) +
                       " does not match controller rank " + std::to_string(c.rank()));
  }
  return c.state_gain * g_prev.g;
}

/// u_k = Π_u·F·(F_p†Π_p + F_z·Y·W⁻¹·F†)·w̃ₖ₋₁.
[[nodiscard]] inline Vector control_from_trajectory(const Controller& c,
                                                    const WindowSegment& seg_prev) {
  detail::require_laws(c);
  if (seg_prev.values.size() != c.trajectory_gain.cols()) {
    throw InvalidInput("window length " + std::to_string(seg_prev.values.size()) +
                       " does not match controller window " +
                       std::to_string(c.trajectory_gain.cols()));
  }
  return c.trajectory_gain * seg_prev.values;
}

// ---------------------------------------------------------------------------
// Gain family
// ---------------------------------------------------------------------------

/// Data (Q, S, R) of the quadratic form v₁ᵀQv₁ + 2v₁ᵀSv₂ − v₂ᵀRv₂.
struct GainFamilyParams {
  Matrix Qf;  // n1 × n1, symmetric
  Matrix Sf;  // n1 × n2
  Matrix Rf;  // n2 × n2, symmetric positive definite
};

[[nodiscard]] inline double quadratic_form(const GainFamilyParams& p, const Vector& v1,
                                           const Vector& v2) {
  return v1.dot(p.Qf * v1) + 2.0 * v1.dot(p.Sf * v2) - v2.dot(p.Rf * v2);
}

[[nodiscard]] inline double spectral_norm(const Matrix& u) {
  if (u.size() == 0) return 0.0;
  return svd(u, SvdShape::Thin).singular_values(0);
}

/// K = R^{-1/2}·U·(Q + SR⁻¹Sᵀ)^{1/2} + R⁻¹Sᵀ for a contraction U (n2 × n1).
[[nodiscard]] inline Matrix gain_family(const GainFamilyParams& p, const Matrix& u) {
  const Eigen::Index n1 = p.Qf.rows();
  const Eigen::Index n2 = p.Rf.rows();
  if (p.Qf.cols() != n1 || p.Rf.cols() != n2 || p.Sf.rows() != n1 || p.Sf.cols() != n2) {
    throw InvalidInput("gain family: inconsistent Q/S/R shapes");
  }
  if (u.rows() != n2 || u.cols() != n1) {
    throw InvalidInput("gain family: U must be " + std::to_string(n2) + "x" + std::to_string(n1));
  }
  if (!is_symmetric(p.Qf) || !is_symmetric(p.Rf)) throw InvalidInput("gain family: Q, R must be symmetric");
  if (n2 > 0 && !(min_symmetric_eigenvalue(p.Rf) > 0.0)) {
    throw InvalidInput("gain family: R must be positive definite");
  }
  const double unorm = spectral_norm(u);
  if (unorm > 1.0 + 1e-12) {
    throw InvalidInput("gain family: U is not a contraction (norm " + std::to_string(unorm) + ")");
  }
  const Eigen::LDLT<Matrix> r_ldlt(p.Rf);
  const Matrix rinv_st = r_ldlt.solve(p.Sf.transpose());
  const Matrix g = symmetrize(p.Qf + p.Sf * rinv_st);
  const Matrix g_half = psd_sqrt(g);  // NoSolution when the family is empty
  return pd_inverse_sqrt(p.Rf) * u * g_half + rinv_st;
}

/// Gain-family data for the decrease ‖𝔤‖²_M − ‖A𝔤 + F_z z‖²_M under certificate M.
[[nodiscard]] inline GainFamilyParams decrease_form(const Controller& c) {
  const Matrix& a = c.tm.A;
  const Matrix& fz = c.tm.Fz;
  return {symmetrize(c.M - a.transpose() * c.M * a), -a.transpose() * c.M * fz,
          symmetrize(fz.transpose() * c.M * fz)};
}

/// All gains z = K_z·𝔤 achieving strict Lyapunov decrease under M, indexed by
/// a strict contraction U (m_z × r).
[[nodiscard]] inline Matrix stabilizing_gain_family(const Controller& c, const Matrix& u) {
  const double unorm = spectral_norm(u);
  if (!(unorm < 1.0)) {
    throw InvalidInput("stabilizing family needs a strict contraction (norm " +
                       std::to_string(unorm) + ")");
  }
  return gain_family(decrease_form(c), u);
}

/// ‖𝔤‖²_M − ‖(A + F_z·K_z)𝔤‖²_M.
[[nodiscard]] inline double lyapunov_decrease(const Controller& c, const Matrix& kz, const Vector& g) {
  const Vector next = c.tm.A * g + c.tm.Fz * (kz * g);
  return g.dot(c.M * g) - next.dot(c.M * next);
}

// ---------------------------------------------------------------------------
// Stability-constrained step
// ---------------------------------------------------------------------------

struct ConstrainedStep {
  Parameterizer g_next;
  Vector z;
  double multiplier = 0.0;  // 0 when the Lyapunov constraint is inactive
  bool constraint_active = false;
};

/// Minimum eigenvalue of [[‖𝔤ₖ₋₁‖²_M, 𝔤ₖᵀ], [𝔤ₖ, M⁻¹]]; positive iff V strictly decreases.
[[nodiscard]] inline double stability_block_min_eigenvalue(const Controller& c, const Vector& g_prev,
                                                           const Vector& g_next) {
  Matrix top(1, 1);
  top(0, 0) = g_prev.dot(c.M * g_prev);
  return block_min_eigenvalue(top, g_next, c.W);
}

/// Minimizes ½𝔤ₖᵀH𝔤ₖ + fᵀ𝔤ₖ over 𝔤ₖ = A𝔤ₖ₋₁ + F_z z subject to
/// ‖𝔤ₖ‖²_M ≤ (1 − eps)·‖𝔤ₖ₋₁‖²_M. One quadratic constraint, so the KKT system
/// reduces to a scalar search on its multiplier.
[[nodiscard]] inline ConstrainedStep constrained_step(const Controller& c, const Parameterizer& g_prev,
                                                      const Matrix& cost_h, const Vector& cost_f,
                                                      double eps = 1e-6) {
  const Eigen::Index r = c.rank();
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eps must lie in (0, 1)");
  if (g_prev.g.size() != r) throw InvalidInput("parameterizer length does not match controller rank");
  if (cost_h.rows() != r || cost_h.cols() != r || cost_f.size() != r) {
    throw InvalidInput("cost dimensions must match the parameterizer");
  }
  if (!is_symmetric(cost_h)) throw InvalidInput("cost Hessian must be symmetric");

  const Matrix& m = c.M;
  const Matrix& fz = c.tm.Fz;
  const double v_prev = g_prev.g.dot(m * g_prev.g);
  if (!(v_prev > 0.0)) throw InvalidInput("previous parameterizer must be non-zero");
  const double bound = (1.0 - eps) * v_prev;

  const Vector a = c.tm.A * g_prev.g;
  const Matrix hz = symmetrize(fz.transpose() * cost_h * fz);
  const Vector hz_rhs = fz.transpose() * (cost_h * a + cost_f);
  const Matrix mz = symmetrize(fz.transpose() * m * fz);
  const Vector mz_rhs = fz.transpose() * (m * a);

  auto z_at = [&](double lambda) -> Vector {
    return -(hz + lambda * mz).ldlt().solve(hz_rhs + lambda * mz_rhs);
  };
  auto excess = [&](const Vector& z) {
    const Vector g = a + fz * z;
    return g.dot(m * g) - bound;
  };
  auto finish = [&](const Vector& z, double lambda, bool active) {
    return ConstrainedStep{{a + fz * z, g_prev.time_index + 1}, z, lambda, active};
  };

  if (fz.cols() == 0) {
    if (excess(Vector(0)) <= 0.0) return finish(Vector(0), 0.0, false);
    throw NoSolution("no free input and the autonomous step violates the decrease bound");
  }

  const double hz_scale = std::max(1.0, hz.norm());
  if (min_symmetric_eigenvalue(hz) > 1e-12 * hz_scale) {
    const Vector z0 = z_at(0.0);
    if (excess(z0) <= 0.0) return finish(z0, 0.0, false);
  }

  const Vector z_inf = -mz.ldlt().solve(mz_rhs);
  if (excess(z_inf) >= 0.0) {
    throw NoSolution("decrease bound (1 - eps) unreachable from this parameterizer; reduce eps");
  }

  double lo = 0.0;
  double hi = 1.0;
  int grow = 0;
  while (excess(z_at(hi)) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 2000) throw NumericalFailure("multiplier bracket did not close", hi);
  }
  const double tol = 1e-10 * bound;
  Vector z_hi = z_at(hi);
  for (int it = 0; it < 400; ++it) {
    if (excess(z_hi) >= -tol || hi - lo <= 1e-15 * hi) break;
    const double mid = 0.5 * (lo + hi);
    const Vector z_mid = z_at(mid);
    if (excess(z_mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
      z_hi = z_mid;
    }
  }
  return finish(z_hi, hi, true);
}

}  // namespace ddc

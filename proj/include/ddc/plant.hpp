#pragma once

// Data-generating LTI plants: transfer-matrix description, per-entry
// controllable-canonical realization, open/closed-loop simulation and
// excitation signals.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ddc/synthesis.hpp"

namespace ddc {

/// Rational entry num(z)/den(z), coefficients in descending powers of z.
struct TransferEntry {
  std::vector<double> num;
  std::vector<double> den;
};

struct TransferMatrix {
  std::vector<std::vector<TransferEntry>> entries;  // p rows × m columns

  [[nodiscard]] Eigen::Index outputs() const noexcept {
    return static_cast<Eigen::Index>(entries.size());
  }
  [[nodiscard]] Eigen::Index inputs() const noexcept {
    return entries.empty() ? 0 : static_cast<Eigen::Index>(entries.front().size());
  }
};

/// The 2×2 unstable, non-minimum-phase example plant. The second entry of the
/// first row is read with denominator z² − 0.324z + 0.449; the printed source
/// drops the z on the middle term.
[[nodiscard]] inline TransferMatrix unstable_mimo_example() {
  return {{
      {{{-0.2, 0.367}, {1.0, -1.083}}, {{0.6775, 1.198}, {1.0, -0.324, 0.449}}},
      {{{-0.341, 0.449}, {1.0, -1.341, 0.449}}, {{-0.428}, {1.0, -1.14}}},
  }};
}

struct SisoRealization {
  Matrix A;  // companion form
  Vector B;  // e₁
  Vector C;  // output row (stored as a column)
  double D = 0.0;
};

struct PlantRealization {
  Eigen::Index m = 0;
  Eigen::Index p = 0;
  std::vector<std::vector<SisoRealization>> blocks;  // p × m
  // Block-diagonal assembly, states ordered by entry (row-major).
  Matrix A, B, C, D;

  [[nodiscard]] Eigen::Index order() const noexcept { return A.rows(); }
};

namespace detail {

inline std::vector<double> strip_leading_zeros(std::vector<double> c) {
  std::size_t first = 0;
  while (first + 1 < c.size() && c[first] == 0.0) ++first;
  c.erase(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(first));
  return c;
}

inline SisoRealization realize_entry(const TransferEntry& e, const std::string& where) {
  for (double v : e.num) if (!std::isfinite(v)) throw InvalidInput(where + ": non-finite numerator");
  for (double v : e.den) if (!std::isfinite(v)) throw InvalidInput(where + ": non-finite denominator");
  if (e.den.empty() || e.den.front() == 0.0) {
    throw InvalidInput(where + ": denominator leading coefficient must be non-zero");
  }
  std::vector<double> num = e.num.empty() ? std::vector<double>{0.0} : strip_leading_zeros(e.num);
  const std::vector<double>& den = e.den;
  const auto n = static_cast<Eigen::Index>(den.size()) - 1;
  if (static_cast<Eigen::Index>(num.size()) - 1 > n) {
    throw InvalidInput(where + ": improper entry (numerator degree exceeds denominator degree)");
  }
  const double lead = den.front();
  std::vector<double> b(static_cast<std::size_t>(n + 1), 0.0);
  std::copy(num.begin(), num.end(), b.end() - static_cast<std::ptrdiff_t>(num.size()));

  SisoRealization s;
  s.D = b[0] / lead;
  s.A = Matrix::Zero(n, n);
  s.B = Vector::Zero(n);
  s.C = Vector::Zero(n);
  if (n > 0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a_i = den[static_cast<std::size_t>(i + 1)] / lead;
      s.A(0, i) = -a_i;
      s.C(i) = b[static_cast<std::size_t>(i + 1)] / lead - s.D * a_i;
    }
    s.A.bottomLeftCorner(n - 1, n - 1).setIdentity();
    s.B(0) = 1.0;
  }
  return s;
}

}  // namespace detail

/// Controllable canonical form per entry; output i sums the entries of row i.
[[nodiscard]] inline PlantRealization realize(const TransferMatrix& g) {
  PlantRealization pr;
  pr.p = g.outputs();
  pr.m = g.inputs();
  if (pr.p == 0 || pr.m == 0) throw InvalidInput("transfer matrix must be non-empty");
  Eigen::Index total = 0;
  for (Eigen::Index i = 0; i < pr.p; ++i) {
    const auto& row = g.entries[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != pr.m) throw InvalidInput("ragged transfer matrix");
    std::vector<SisoRealization> brow;
    for (Eigen::Index j = 0; j < pr.m; ++j) {
      brow.push_back(detail::realize_entry(row[static_cast<std::size_t>(j)],
                                           "entry (" + std::to_string(i + 1) + "," +
                                               std::to_string(j + 1) + ")"));
      total += brow.back().A.rows();
    }
    pr.blocks.push_back(std::move(brow));
  }
  pr.A = Matrix::Zero(total, total);
  pr.B = Matrix::Zero(total, pr.m);
  pr.C = Matrix::Zero(pr.p, total);
  pr.D = Matrix::Zero(pr.p, pr.m);
  Eigen::Index off = 0;
  for (Eigen::Index i = 0; i < pr.p; ++i) {
    for (Eigen::Index j = 0; j < pr.m; ++j) {
      const SisoRealization& s = pr.blocks[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const Eigen::Index n = s.A.rows();
      pr.A.block(off, off, n, n) = s.A;
      pr.B.block(off, j, n, 1) = s.B;
      pr.C.block(i, off, 1, n) = s.C.transpose();
      pr.D(i, j) = s.D;
      off += n;
    }
  }
  return pr;
}

enum class RunMode { Open, Closed };

struct SimulationRun {
  Trajectory trajectory;
  Matrix state_log;   // plant state before each simulated step, one row per step
  Vector final_state; // state after the last step
  std::uint64_t seed = 0;
  RunMode mode = RunMode::Open;
};

/// Drives the realization with `u` (one row per step) from state x0 (zero when omitted).
[[nodiscard]] inline SimulationRun simulate_open(const PlantRealization& pr, const Matrix& u,
                                                 std::optional<Vector> x0 = {}) {
  if (u.rows() > 0 && u.cols() != pr.m) {
    throw InvalidInput("input sequence has " + std::to_string(u.cols()) + " channels, plant has " +
                       std::to_string(pr.m));
  }
  require_finite(u, "input sequence");
  Vector x = x0 ? *x0 : Vector::Zero(pr.order());
  if (x.size() != pr.order()) throw InvalidInput("initial state has wrong dimension");

  const Eigen::Index steps = u.rows();
  Matrix w(steps, pr.m + pr.p);
  SimulationRun run;
  run.state_log.resize(steps, pr.order());
  for (Eigen::Index k = 0; k < steps; ++k) {
    const Vector uk = u.row(k).transpose();
    run.state_log.row(k) = x.transpose();
    const Vector yk = pr.C * x + pr.D * uk;
    x = pr.A * x + pr.B * uk;
    if (!yk.allFinite() || !x.allFinite()) {
      throw NumericalFailure("open-loop simulation overflowed at step " + std::to_string(k));
    }
    w.row(k) << uk.transpose(), yk.transpose();
  }
  run.trajectory = Trajectory({pr.m, pr.p}, std::move(w));
  run.final_state = x;
  return run;
}

/// Reproducible i.i.d. uniform samples on [−amplitude, amplitude], `steps` rows × m.
[[nodiscard]] inline Matrix generate_excitation(Eigen::Index m, Eigen::Index steps, std::uint64_t seed,
                                                double amplitude) {
  if (steps < 1) throw InvalidInput("excitation length must be at least 1");
  if (m < 0) throw InvalidInput("negative input count");
  if (!std::isfinite(amplitude) || amplitude < 0.0) throw InvalidInput("amplitude must be finite and >= 0");
  std::mt19937_64 gen(seed);
  Matrix u(steps, m);
  for (Eigen::Index k = 0; k < steps; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) {
      // 53 random bits mapped to [0, 1); avoids the library-specific
      // uniform_real_distribution so files are identical across toolchains.
      const double unit = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      u(k, j) = amplitude * (2.0 * unit - 1.0);
    }
  }
  return u;
}

/// Plant state at the sample right after `traj`, recovered by least squares
/// from its input/output data. Throws when the data is not a plant trajectory.
[[nodiscard]] inline Vector state_after(const PlantRealization& pr, const Trajectory& traj) {
  const Eigen::Index n = pr.order();
  const Eigen::Index steps = traj.size();
  if (traj.partition() != Partition{pr.m, pr.p}) {
    throw InvalidInput("trajectory partition " + to_string(traj.partition()) +
                       " does not match plant " + to_string(Partition{pr.m, pr.p}));
  }
  const Matrix u = traj.inputs();
  const Matrix y = traj.outputs();
  // y_i = C·Aⁱ·x₀ + forced response of u_0..u_i
  Matrix obs(steps * pr.p, n);
  Vector rhs(steps * pr.p);
  Matrix cai = pr.C;
  Vector forced_state = Vector::Zero(n);
  for (Eigen::Index i = 0; i < steps; ++i) {
    obs.middleRows(i * pr.p, pr.p) = cai;
    const Vector ui = u.row(i).transpose();
    rhs.segment(i * pr.p, pr.p) = y.row(i).transpose() - pr.C * forced_state - pr.D * ui;
    forced_state = pr.A * forced_state + pr.B * ui;
    cai = cai * pr.A;
  }
  const Vector x0 = obs.completeOrthogonalDecomposition().solve(rhs);
  const double resid = (obs * x0 - rhs).norm();
  const double scale = std::max(1.0, traj.samples().norm());
  if (resid > 1e-6 * scale) {
    throw InvalidInput("initial window is not a trajectory of the plant (residual " +
                       std::to_string(resid) + ")");
  }
  Matrix ak = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < steps; ++i) ak = pr.A * ak;
  return ak * x0 + forced_state;
}

/// Closed loop under the trajectory-feedback law. `init` holds L+1 samples;
/// `plant_state` is the state at the first new step (recovered from `init`
/// when omitted). The returned trajectory contains the seed window followed by
/// `horizon` closed-loop samples.
[[nodiscard]] inline SimulationRun simulate_closed(const PlantRealization& pr, const Controller& ctrl,
                                                   const Trajectory& init, Eigen::Index horizon,
                                                   std::optional<Vector> plant_state = {}) {
  const Eigen::Index L = ctrl.tm.basis.L;
  const Partition part{pr.m, pr.p};
  if (ctrl.tm.basis.part != part) {
    throw InvalidInput("controller partition " + to_string(ctrl.tm.basis.part) +
                       " does not match plant " + to_string(part));
  }
  if (init.partition() != part) throw InvalidInput("init window partition does not match plant");
  if (init.size() != L + 1) {
    throw InvalidInput("init window needs " + std::to_string(L + 1) + " samples, got " +
                       std::to_string(init.size()));
  }
  if (horizon < 1) throw InvalidInput("horizon must be at least 1");
  Vector x = plant_state ? *plant_state : state_after(pr, init);
  if (x.size() != pr.order()) throw InvalidInput("plant state has wrong dimension");

  const Eigen::Index w = part.w();
  Matrix samples(L + 1 + horizon, w);
  samples.topRows(L + 1) = init.samples();
  SimulationRun run;
  run.mode = RunMode::Closed;
  run.state_log.resize(horizon, pr.order());
  WindowSegment seg{Vector(ctrl.tm.basis.window_length()), part, L, 0};
  for (Eigen::Index k = 0; k < horizon; ++k) {
    const Eigen::Index row = L + 1 + k;
    for (Eigen::Index i = 0; i <= L; ++i) {
      seg.values.segment(i * w, w) = samples.row(row - 1 - L + i).transpose();
    }
    seg.end_time = init.start_time() + row - 1;
    const Vector uk = control_from_trajectory(ctrl, seg);
    run.state_log.row(k) = x.transpose();
    const Vector yk = pr.C * x + pr.D * uk;
    x = pr.A * x + pr.B * uk;
    if (!uk.allFinite() || !yk.allFinite() || !x.allFinite()) {
      throw NumericalFailure("closed-loop state became non-finite at step " + std::to_string(k + 1));
    }
    samples.row(row) << uk.transpose(), yk.transpose();
  }
  run.trajectory = Trajectory(part, std::move(samples), init.start_time());
  run.final_state = x;
  return run;
}

}  // namespace ddc

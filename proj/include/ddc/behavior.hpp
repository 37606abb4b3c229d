#pragma once

// Hankel-matrix parameterization of a measured behavior.
//
// A window w̃ₖ stacks the samples w_{k−L}, …, w_k time-major, each sample laid
// out as (u, y). With F the left singular vectors of the Hankel matrix that
// belong to non-zero singular values, every window of the behavior is
// w̃ₖ = F·𝔤ₖ for a unique parameterizer 𝔤ₖ = Fᵀw̃ₖ.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ddc/numerics.hpp"

namespace ddc {

/// Input/output split of the manifest variable w = (u, y).
struct Partition {
  Eigen::Index m = 0;  // inputs
  Eigen::Index p = 0;  // outputs

  [[nodiscard]] Eigen::Index w() const noexcept { return m + p; }
  friend bool operator==(const Partition&, const Partition&) = default;
};

inline std::string to_string(const Partition& part) {
  return "(m=" + std::to_string(part.m) + ", p=" + std::to_string(part.p) + ")";
}

/// Time-indexed samples of w, one row per time step.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Partition part, Matrix samples, long start_time = 0)
      : part_(part), samples_(std::move(samples)), start_time_(start_time) {
    if (part_.m < 0 || part_.p < 0) throw InvalidInput("negative partition size");
    if (samples_.rows() > 0 && samples_.cols() != part_.w()) {
      throw InvalidInput("trajectory samples have " + std::to_string(samples_.cols()) +
                         " columns, partition " + to_string(part_) + " needs " +
                         std::to_string(part_.w()));
    }
    if (samples_.rows() == 0) samples_.resize(0, part_.w());
    require_finite(samples_, "trajectory");
  }

  /// Builds w = (u, y) row-wise from separate input and output sequences.
  static Trajectory from_io(const Matrix& u, const Matrix& y, long start_time = 0) {
    if (u.rows() != y.rows()) throw InvalidInput("input and output sequences differ in length");
    Matrix w(u.rows(), u.cols() + y.cols());
    w << u, y;
    return Trajectory({u.cols(), y.cols()}, std::move(w), start_time);
  }

  [[nodiscard]] const Partition& partition() const noexcept { return part_; }
  [[nodiscard]] Eigen::Index w_dim() const noexcept { return part_.w(); }
  [[nodiscard]] Eigen::Index size() const noexcept { return samples_.rows(); }
  [[nodiscard]] long start_time() const noexcept { return start_time_; }
  [[nodiscard]] const Matrix& samples() const noexcept { return samples_; }
  [[nodiscard]] Vector sample(Eigen::Index k) const { return samples_.row(k).transpose(); }
  [[nodiscard]] Matrix inputs() const { return samples_.leftCols(part_.m); }
  [[nodiscard]] Matrix outputs() const { return samples_.rightCols(part_.p); }

  /// Samples [first, first + count) as a new trajectory.
  [[nodiscard]] Trajectory slice(Eigen::Index first, Eigen::Index count) const {
    if (first < 0 || count < 0 || first + count > size()) throw InvalidInput("slice out of range");
    return Trajectory(part_, samples_.middleRows(first, count), start_time_ + first);
  }

 private:
  Partition part_{};
  Matrix samples_{};
  long start_time_ = 0;
};

struct HankelMatrix {
  Eigen::Index depth = 0;  // L + 1 block rows
  Matrix matrix;           // (L+1)·w × (T−L+1)
  Partition part;

  [[nodiscard]] Eigen::Index lag() const noexcept { return depth - 1; }
  [[nodiscard]] Eigen::Index width() const noexcept { return matrix.cols(); }
};

struct BehaviorBasis {
  Matrix F;      // orthonormal columns, (L+1)·w × r
  Vector sigma;  // retained singular values
  Eigen::Index L = 0;
  Partition part;

  [[nodiscard]] Eigen::Index rank() const noexcept { return F.cols(); }
  [[nodiscard]] Eigen::Index window_length() const noexcept { return (L + 1) * part.w(); }
};

struct Parameterizer {
  Vector g;
  long time_index = 0;
};

/// Stacked window w̃ over [k−L, k].
struct WindowSegment {
  Vector values;
  Partition part;
  Eigen::Index L = 0;
  long end_time = 0;
};

struct ExcitationReport {
  Eigen::Index rank = 0;
  Eigen::Index inferred_n = 0;  // rank − (L+1)·m, may be negative
  std::optional<Eigen::Index> n_hint;
  bool satisfied = false;
  Vector singular_values;
};

/// Block-Hankel matrix with L+1 block rows from one trajectory.
[[nodiscard]] inline HankelMatrix build_hankel(const Trajectory& traj, Eigen::Index L) {
  if (L < 1) throw InvalidInput("Hankel lag L must be at least 1");
  const Eigen::Index n_samples = traj.size();
  if (n_samples < L + 2) {
    throw InvalidInput("trajectory too short for L=" + std::to_string(L) + ": need at least " +
                       std::to_string(L + 2) + " samples, got " + std::to_string(n_samples));
  }
  const Eigen::Index w = traj.w_dim();
  const Eigen::Index width = n_samples - L;
  HankelMatrix h{L + 1, Matrix((L + 1) * w, width), traj.partition()};
  for (Eigen::Index j = 0; j < width; ++j) {
    for (Eigen::Index i = 0; i <= L; ++i) {
      h.matrix.block(i * w, j, w, 1) = traj.samples().row(i + j).transpose();
    }
  }
  return h;
}

/// Rank diagnostic for the persistency-of-excitation condition
/// rank(H) = (L+1)·m + n.
[[nodiscard]] inline ExcitationReport check_excitation(const HankelMatrix& h,
                                                       std::optional<Eigen::Index> n_hint = {},
                                                       double tol_rel = kDefaultRankTol) {
  ExcitationReport rep;
  rep.singular_values = svd(h.matrix, SvdShape::Thin).singular_values;
  rep.rank = numerical_rank(rep.singular_values, tol_rel);
  const Eigen::Index free_dims = h.depth * h.part.m;
  rep.inferred_n = rep.rank - free_dims;
  rep.n_hint = n_hint;
  if (n_hint) {
    rep.satisfied = rep.rank == free_dims + *n_hint;
  } else {
    rep.satisfied = rep.inferred_n >= 0 && rep.rank < h.width() && rep.rank < h.matrix.rows();
  }
  return rep;
}

/// F = left singular vectors of the non-zero singular values.
[[nodiscard]] inline BehaviorBasis extract_basis(const HankelMatrix& h,
                                                 double tol_rel = kDefaultRankTol) {
  const SvdResult s = svd(h.matrix, SvdShape::Thin);
  const Eigen::Index r = numerical_rank(s.singular_values, tol_rel);
  if (r == 0) throw InvalidInput("Hankel matrix is numerically zero; no behavior to extract");
  return {s.left_vectors.leftCols(r), s.singular_values.head(r), h.lag(), h.part};
}

/// The window of `traj` that ends at sample index `end` (0-based within traj).
[[nodiscard]] inline WindowSegment window(const Trajectory& traj, Eigen::Index L, Eigen::Index end) {
  if (end < L || end >= traj.size()) {
    throw InvalidInput("window end " + std::to_string(end) + " out of range for L=" +
                       std::to_string(L) + " and " + std::to_string(traj.size()) + " samples");
  }
  const Eigen::Index w = traj.w_dim();
  WindowSegment seg{Vector((L + 1) * w), traj.partition(), L, 0};
  for (Eigen::Index i = 0; i <= L; ++i) {
    seg.values.segment(i * w, w) = traj.samples().row(end - L + i).transpose();
  }
  seg.end_time = traj.start_time() + end;
  return seg;
}

/// Every (L+1)-window of `traj`, in time order.
[[nodiscard]] inline std::vector<WindowSegment> windows(const Trajectory& traj, Eigen::Index L) {
  std::vector<WindowSegment> out;
  for (Eigen::Index e = L; e < traj.size(); ++e) out.push_back(window(traj, L, e));
  return out;
}

namespace detail {
inline void check_segment(const BehaviorBasis& basis, const Vector& v) {
  if (v.size() != basis.F.rows()) {
    throw InvalidInput("window length " + std::to_string(v.size()) + " does not match basis rows " +
                       std::to_string(basis.F.rows()));
  }
}
}  // namespace detail

/// 𝔤ₖ = F†w̃ₖ (= Fᵀw̃ₖ since F has orthonormal columns).
[[nodiscard]] inline Parameterizer state_map(const BehaviorBasis& basis, const WindowSegment& seg) {
  detail::check_segment(basis, seg.values);
  return {basis.F.transpose() * seg.values, seg.end_time};
}

/// w̃ₖ = F𝔤ₖ.
[[nodiscard]] inline WindowSegment reconstruct(const BehaviorBasis& basis, const Parameterizer& g) {
  if (g.g.size() != basis.rank()) {
    throw InvalidInput("parameterizer length " + std::to_string(g.g.size()) +
                       " does not match basis rank " + std::to_string(basis.rank()));
  }
  return {basis.F * g.g, basis.part, basis.L, g.time_index};
}

/// ‖(I − FFᵀ)w̃‖₂: distance of a window from the identified behavior.
[[nodiscard]] inline double membership_residual(const BehaviorBasis& basis, const WindowSegment& seg) {
  detail::check_segment(basis, seg.values);
  return (seg.values - basis.F * (basis.F.transpose() * seg.values)).norm();
}

/// Concatenation of two trajectories that agree on `overlap` samples; the
/// shared samples appear once.
[[nodiscard]] inline Trajectory weave(const Trajectory& past, const Trajectory& future,
                                      Eigen::Index overlap) {
  if (past.partition() != future.partition()) throw InvalidInput("weave: partitions differ");
  if (overlap < 0 || overlap > past.size() || overlap > future.size()) {
    throw InvalidInput("weave: overlap " + std::to_string(overlap) + " exceeds segment length");
  }
  const Matrix tail = past.samples().bottomRows(overlap);
  const Matrix head = future.samples().topRows(overlap);
  if (overlap > 0) {
    const double dev = (tail - head).cwiseAbs().maxCoeff();
    const double scale = std::max({1.0, tail.cwiseAbs().maxCoeff(), head.cwiseAbs().maxCoeff()});
    if (dev > 1e-10 * scale) {
      throw InvalidInput("weave: overlapping samples differ (max deviation " + std::to_string(dev) +
                         ")");
    }
  }
  Matrix joined(past.size() + future.size() - overlap, past.w_dim());
  joined << past.samples(), future.samples().bottomRows(future.size() - overlap);
  return Trajectory(past.partition(), std::move(joined), past.start_time());
}

}  // namespace ddc

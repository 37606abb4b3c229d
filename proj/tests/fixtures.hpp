#pragma once

// Shared data sets for the unit tests and the acceptance binary.

#include <random>

#include "ddc/ddc.hpp"

namespace ddc::testing {

inline constexpr Eigen::Index kMimoL = 8;
inline constexpr Eigen::Index kMimoT = 60;

/// Open-loop data of the 2×2 example plant, T+1 samples.
inline Trajectory mimo_data(std::uint64_t seed, Eigen::Index T = kMimoT, double amplitude = 1.0) {
  const PlantRealization pr = realize(unstable_mimo_example());
  return simulate_open(pr, generate_excitation(pr.m, T + 1, seed, amplitude)).trajectory;
}

inline TransferMatrix scalar_plant(double pole, double gain = 1.0) {
  return {{{{{gain}, {1.0, -pole}}}}};
}

/// y_{k+1} = a·y_k + u_k excited from rest.
inline Trajectory scalar_controlled_data(double a, Eigen::Index samples, std::uint64_t seed) {
  const PlantRealization pr = realize(scalar_plant(a));
  return simulate_open(pr, generate_excitation(1, samples, seed, 1.0)).trajectory;
}

/// Output sequence of x_{k+1} = A x_k, y_k = C x_k with no input.
inline Trajectory autonomous_data(const Matrix& a, const Matrix& c, const Vector& x0, Eigen::Index samples) {
  Matrix y(samples, c.rows());
  Vector x = x0;
  for (Eigen::Index k = 0; k < samples; ++k) {
    y.row(k) = (c * x).transpose();
    x = a * x;
  }
  return Trajectory({0, c.rows()}, y);
}

inline Matrix gaussian(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> d;
  Matrix a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = d(gen);
  return a;
}

inline Matrix orthogonal(std::mt19937_64& gen, Eigen::Index n) {
  return Eigen::HouseholderQR<Matrix>(gaussian(gen, n, n)).householderQ();
}

/// Random matrix with spectral norm exactly `norm`.
inline Matrix contraction(std::mt19937_64& gen, Eigen::Index rows, Eigen::Index cols, double norm) {
  const Matrix u = gaussian(gen, rows, cols);
  const double s = spectral_norm(u);
  return s > 0.0 ? Matrix(u * (norm / s)) : u;
}

/// A Controller for the 2×2 example built with the pipeline defaults.
inline Controller mimo_controller(double decay = 0.8) {
  const BehaviorBasis b = extract_basis(build_hankel(mimo_data(42), kMimoL));
  SynthesisOptions opt;
  opt.decay_rate = decay;
  return synthesize(build_transition(b), opt);
}

}  // namespace ddc::testing

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ndrl/errors.hpp"

namespace ndrl {

// Embedding tables are row-per-item; row-major keeps a row contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }

/// Glorot/Xavier uniform bound for a (fan_in, fan_out) weight.
inline double xavier_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline Matrix xavier_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::uniform_real_distribution<double> dist(-xavier_bound(rows, cols), xavier_bound(rows, cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

inline Vector xavier_vector(Eigen::Index size, Rng& rng) {
  // Treated as a (size, 1) weight.
  std::uniform_real_distribution<double> dist(-xavier_bound(size, 1), xavier_bound(size, 1));
  Vector v(size);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return v;
}

template <typename A, typename B>
void require_same_size(const A& a, const B& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()) + ")");
  }
}

/// Softmax over `logits` in place, shifted by the max for stability.
template <typename V>
void softmax_inplace(V&& logits) {
  const double m = logits.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    logits[i] = std::exp(logits[i] - m);
    sum += logits[i];
  }
  logits /= sum;
}

/// Records every argument of a piecewise-linear kink (LeakyReLU input, hinge,
/// norm) seen during a forward pass. Gradient checks skip coordinates whose
/// perturbation flips any recorded sign or lands too close to a kink.
struct KinkMonitor {
  double nearest = std::numeric_limits<double>::infinity();
  std::vector<bool> signs;

  void observe(double x) {
    nearest = std::min(nearest, std::abs(x));
    signs.push_back(x > 0.0);
  }
};

inline void observe(KinkMonitor* monitor, double x) {
  if (monitor) monitor->observe(x);
}

}  // namespace ndrl

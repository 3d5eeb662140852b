#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "csi/cassi.hpp"

namespace csi {

/// Per-voxel sensing weight H^T 1.
Tensor3 sensing_weights(const CodedApertureSet& a, Dims dims);

/// H^T y divided voxel-wise by H^T 1 (zero where the weight vanishes).
Tensor3 back_projection(const MeasurementSet& m, const CodedApertureSet& a, Dims dims);

/// Orthonormal DCT-II matrix: row k holds the k-th cosine basis vector.
Matrix dct_matrix(std::size_t n);

inline double soft_threshold(double v, double t) {
  return v > t ? v - t : (v < -t ? v + t : 0.0);
}

struct FistaOptions {
  std::optional<double> lambda;  // default 0.01 * ||analysis(H^T y)||_inf
  std::size_t iterations = 300;
  std::size_t power_iterations = 30;
};

struct FistaResult {
  Tensor3 reconstruction;
  std::vector<double> objective;  // objective[k] after k iterations, objective[0] at zero
  double lambda = 0.0;
  double lipschitz = 0.0;
};

/// Monotone FISTA on 0.5||y - H vect(D^T-synthesis(coeffs))||^2 + lambda ||coeffs||_1
/// with separable 3-D DCT coefficients.
FistaResult fista_dct(const MeasurementSet& m, const CodedApertureSet& a, Dims dims,
                      const FistaOptions& opts = {});

/// Default regularisation weight for the given measurements.
double default_lambda(const MeasurementSet& m, const CodedApertureSet& a, Dims dims);

/// Largest eigenvalue of H^T H by power iteration from a fixed start vector.
double estimate_lipschitz(const CodedApertureSet& a, Dims dims, std::size_t iterations);

}  // namespace csi

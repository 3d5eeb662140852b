#pragma once

#include <cstdint>

#include "csi/tensor.hpp"

namespace csi {

/// Learnable low-rank input of the generator: the feature tensor is
/// core x1 U x2 V x3 W, with a core of extents round(rho * (M, N, L)).
struct TuckerLatent {
  Tensor3 core;
  Matrix U;  // M x Mr
  Matrix V;  // N x Nr
  Matrix W;  // L x Lr
  double rho = 1.0;

  Dims full_dims() const { return {U.rows(), V.rows(), W.rows()}; }
  std::size_t parameter_count() const { return core.size() + U.size() + V.size() + W.size(); }
};

struct LatentGradients {
  Tensor3 core;
  Matrix U, V, W;
};

/// Core extents for a rank factor rho in (0, 1]: max(1, round-half-up(rho * extent)).
Dims dims_from_rho(Dims full, double rho);

/// Core ~ N(0, 1) and factor entries ~ N(0, 1/sqrt(columns)), which keeps the
/// expanded entries at unit scale.
TuckerLatent init_latent(Dims full, double rho, std::uint64_t seed);

Tensor3 expand(const TuckerLatent& lat);

/// Gradients of a loss with respect to core and factors, given dLoss/dZ.
LatentGradients backprop_latent(const TuckerLatent& lat, const Tensor3& grad);

}  // namespace csi

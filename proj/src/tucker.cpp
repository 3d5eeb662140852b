#include "csi/tucker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csi/error.hpp"
#include "csi/random.hpp"

namespace csi {

namespace {

std::size_t reduced_extent(std::size_t extent, double rho) {
  const auto r = static_cast<std::size_t>(std::floor(rho * static_cast<double>(extent) + 0.5));
  return std::clamp<std::size_t>(r, 1, extent);
}

void fill_normal(std::span<double> v, Rng& rng, double stddev) {
  for (double& x : v) x = rng.normal(0.0, stddev);
}

}  // namespace

Dims dims_from_rho(Dims full, double rho) {
  if (!(rho > 0.0 && rho <= 1.0))
    throw ArgumentError("rank factor must lie in (0, 1], got " + std::to_string(rho));
  return {reduced_extent(full.M, rho), reduced_extent(full.N, rho), reduced_extent(full.L, rho)};
}

TuckerLatent init_latent(Dims full, double rho, std::uint64_t seed) {
  const Dims r = dims_from_rho(full, rho);
  Rng rng(seed);
  TuckerLatent lat{Tensor3(r), Matrix(full.M, r.M), Matrix(full.N, r.N), Matrix(full.L, r.L), rho};
  fill_normal(lat.core.data(), rng, 1.0);
  fill_normal(lat.U.data(), rng, 1.0 / std::sqrt(static_cast<double>(r.M)));
  fill_normal(lat.V.data(), rng, 1.0 / std::sqrt(static_cast<double>(r.N)));
  fill_normal(lat.W.data(), rng, 1.0 / std::sqrt(static_cast<double>(r.L)));
  return lat;
}

Tensor3 expand(const TuckerLatent& lat) {
  const Dims& c = lat.core.dims();
  if (lat.U.cols() != c.M || lat.V.cols() != c.N || lat.W.cols() != c.L)
    throw ShapeError("Tucker factors do not match the core extents");
  return mode_product(mode_product(mode_product(lat.core, lat.U, 1), lat.V, 2), lat.W, 3);
}

LatentGradients backprop_latent(const TuckerLatent& lat, const Tensor3& grad) {
  if (!(grad.dims() == lat.full_dims())) throw ShapeError("latent gradient has the wrong extents");
  const Matrix Ut = lat.U.transposed(), Vt = lat.V.transposed(), Wt = lat.W.transposed();

  LatentGradients g;
  g.core = mode_product(mode_product(mode_product(grad, Ut, 1), Vt, 2), Wt, 3);

  const Tensor3 core_u = mode_product(lat.core, lat.U, 1);
  const Tensor3 core_vw = mode_product(mode_product(lat.core, lat.V, 2), lat.W, 3);
  const Tensor3 core_uw = mode_product(core_u, lat.W, 3);
  const Tensor3 core_uv = mode_product(core_u, lat.V, 2);

  g.U = matmul_nt(unfold(grad, 1), unfold(core_vw, 1));
  g.V = matmul_nt(unfold(grad, 2), unfold(core_uw, 2));
  g.W = matmul_nt(unfold(grad, 3), unfold(core_uv, 3));
  return g;
}

}  // namespace csi

#include <doctest.h>

#include <cmath>

#include "csi/error.hpp"
#include "csi/tucker.hpp"
#include "oracles.hpp"

using namespace csi;

namespace {

double loss_of(const TuckerLatent& lat, const Tensor3& target) {
  return oracle::half_sq_dist(expand(lat), target);
}

// dLoss/dZ for 0.5||Z - target||^2.
Tensor3 residual(const TuckerLatent& lat, const Tensor3& target) {
  Tensor3 g = expand(lat);
  axpy(-1.0, target.data(), g.data());
  return g;
}

}  // namespace

TEST_CASE("core extents from the rank factor") {
  CHECK(dims_from_rho({256, 256, 10}, 0.5) == Dims{128, 128, 5});
  CHECK(dims_from_rho({256, 256, 10}, 1.0) == Dims{256, 256, 10});
  CHECK(dims_from_rho({32, 32, 8}, 0.1) == Dims{3, 3, 1});
  CHECK(dims_from_rho({4, 4, 2}, 0.01) == Dims{1, 1, 1});
  // half rounds up
  CHECK(dims_from_rho({5, 3, 1}, 0.5) == Dims{3, 2, 1});
  CHECK_THROWS_AS((void)dims_from_rho({4, 4, 4}, 0.0), ArgumentError);
  CHECK_THROWS_AS((void)dims_from_rho({4, 4, 4}, 1.5), ArgumentError);
}

TEST_CASE("latent initialisation") {
  const TuckerLatent a = init_latent({64, 64, 8}, 0.5, 3), b = init_latent({64, 64, 8}, 0.5, 3);
  CHECK(a.core == b.core);
  CHECK(a.U == b.U);
  CHECK(a.W == b.W);
  CHECK(a.core.dims() == Dims{32, 32, 4});
  CHECK(a.U.rows() == 64);
  CHECK(a.U.cols() == 32);
  CHECK(a.W.cols() == 4);
  CHECK(a.rho == 0.5);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Tensor3 z = expand(init_latent({64, 64, 8}, 0.5, seed));
    const double sd = norm2(z.data()) / std::sqrt(double(z.size()));
    CHECK(sd >= 0.5);
    CHECK(sd <= 2.0);
  }
}

TEST_CASE("expand matches the defining sum") {
  const TuckerLatent lat = init_latent({4, 4, 3}, 0.5, 9);
  const Tensor3 fast = expand(lat), slow = oracle::tucker_brute(lat.core, lat.U, lat.V, lat.W);
  CHECK(oracle::max_abs_diff(fast.data(), slow.data()) <= 1e-12);
}

TEST_CASE("expand is multilinear in the core and each factor") {
  TuckerLatent lat = init_latent({5, 4, 3}, 0.6, 10);
  const Tensor3 base = expand(lat);
  TuckerLatent scaled = lat;
  scale(scaled.core.data(), 2.0);
  scale(scaled.V.data(), -0.5);
  Tensor3 expect = base;
  scale(expect.data(), -1.0);
  CHECK(oracle::relative_error(expand(scaled).data(), expect.data()) <= 1e-13);

  TuckerLatent other = lat;
  other.U = oracle::random_matrix(lat.U.rows(), lat.U.cols(), 11);
  TuckerLatent sum = lat;
  axpy(1.0, other.U.data(), sum.U.data());
  Tensor3 additive = base;
  axpy(1.0, expand(other).data(), additive.data());
  CHECK(oracle::relative_error(expand(sum).data(), additive.data()) <= 1e-13);
}

TEST_CASE("identity factors reproduce the core") {
  TuckerLatent lat;
  lat.core = oracle::random_tensor({3, 2, 2}, 12);
  lat.U = Matrix::identity(3);
  lat.V = Matrix::identity(2);
  lat.W = Matrix::identity(2);
  CHECK(expand(lat) == lat.core);
}

TEST_CASE("latent gradients match central differences") {
  for (double rho : {0.1, 0.5, 1.0}) {
    CAPTURE(rho);
    const Dims d{6, 5, 4};
    TuckerLatent lat = init_latent(d, rho, 20);
    const Tensor3 target = oracle::random_tensor(d, 21);
    const LatentGradients g = backprop_latent(lat, residual(lat, target));
    auto f = [&] { return loss_of(lat, target); };

    CHECK(oracle::relative_error(g.core.data(), oracle::central_difference(lat.core.data(), f)) <= 1e-6);
    CHECK(oracle::relative_error(g.U.data(), oracle::central_difference(lat.U.data(), f)) <= 1e-6);
    CHECK(oracle::relative_error(g.V.data(), oracle::central_difference(lat.V.data(), f)) <= 1e-6);
    CHECK(oracle::relative_error(g.W.data(), oracle::central_difference(lat.W.data(), f)) <= 1e-6);
  }
}

TEST_CASE("latent gradient edge cases") {
  const TuckerLatent lat = init_latent({4, 3, 2}, 0.5, 30);
  const LatentGradients zero = backprop_latent(lat, Tensor3(Dims{4, 3, 2}));
  CHECK(max_abs(zero.core.data()) == 0.0);
  CHECK(max_abs(zero.U.data()) == 0.0);
  CHECK(max_abs(zero.V.data()) == 0.0);
  CHECK(max_abs(zero.W.data()) == 0.0);

  // With identity factors the core gradient is the upstream gradient itself.
  TuckerLatent id;
  id.core = oracle::random_tensor({3, 2, 2}, 31);
  id.U = Matrix::identity(3);
  id.V = Matrix::identity(2);
  id.W = Matrix::identity(2);
  const Tensor3 g = oracle::random_tensor({3, 2, 2}, 32);
  CHECK(backprop_latent(id, g).core == g);

  CHECK_THROWS_AS((void)backprop_latent(lat, Tensor3(Dims{4, 3, 3})), ShapeError);
}

TEST_CASE("latent compresses at moderate rank factors") {
  const Dims d{256, 256, 10};
  for (double rho : {0.1, 0.3, 0.5, 0.7}) {
    const Dims c = dims_from_rho(d, rho);
    const std::size_t count = c.size() + d.M * c.M + d.N * c.N + d.L * c.L;
    CHECK(count < d.size());
  }
  const TuckerLatent lat = init_latent({16, 12, 6}, 0.5, 1);
  CHECK(lat.parameter_count() == 8 * 6 * 3 + 16 * 8 + 12 * 6 + 6 * 3);
}

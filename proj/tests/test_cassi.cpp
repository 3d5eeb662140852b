#include <doctest.h>

#include <cmath>
#include <limits>

#include "csi/cassi.hpp"
#include "csi/error.hpp"
#include "oracles.hpp"

using namespace csi;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> dense_apply(const Matrix& h, std::span<const double> x) {
  std::vector<double> y(h.rows(), 0.0);
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) y[r] += h(r, c) * x[c];
  return y;
}

std::vector<double> dense_apply_t(const Matrix& h, std::span<const double> y) {
  std::vector<double> x(h.cols(), 0.0);
  for (std::size_t r = 0; r < h.rows(); ++r)
    for (std::size_t c = 0; c < h.cols(); ++c) x[c] += h(r, c) * y[r];
  return x;
}

}  // namespace

TEST_CASE("aperture generation") {
  SUBCASE("deterministic for a fixed seed") {
    const auto a = generate_aperture(ApertureKind::binary, {8, 8, 4}, 3, 0.5, 17);
    const auto b = generate_aperture(ApertureKind::binary, {8, 8, 4}, 3, 0.5, 17);
    for (std::size_t s = 0; s < 3; ++s) CHECK(a.code(s) == b.code(s));
    const auto c = generate_aperture(ApertureKind::binary, {8, 8, 4}, 3, 0.5, 18);
    CHECK_FALSE(a.code(0) == c.code(0));
  }
  SUBCASE("Bernoulli(0.5) mean on 256x256") {
    const auto a = generate_aperture(ApertureKind::binary, {256, 256, 10}, 1, 0.5, 3);
    double sum = 0.0;
    for (double v : a.code(0).data()) sum += v;
    CHECK(a.code(0).dims() == Dims{256, 256, 1});
    CHECK(std::abs(sum / (256.0 * 256.0) - 0.5) <= 0.01);
  }
  SUBCASE("colored codes carry one plane per band") {
    const auto a = generate_aperture(ApertureKind::colored, {4, 4, 8}, 2, 0.5, 4);
    REQUIRE(a.shots() == 2);
    for (std::size_t s = 0; s < 2; ++s) {
      CHECK(a.code(s).dims() == Dims{4, 4, 8});
      for (double v : a.code(s).data()) CHECK((v == 0.0 || v == 1.0));
    }
  }
  SUBCASE("transmittance must lie strictly inside (0, 1)") {
    CHECK_THROWS_AS((void)generate_aperture(ApertureKind::binary, {4, 4, 2}, 1, 0.0, 0), ArgumentError);
    CHECK_THROWS_AS((void)generate_aperture(ApertureKind::binary, {4, 4, 2}, 1, 1.0, 0), ArgumentError);
    CHECK_THROWS_AS((void)generate_aperture(ApertureKind::binary, {4, 4, 2}, 0, 0.5, 0), ArgumentError);
  }
  SUBCASE("constructor rejects out-of-range entries") {
    std::vector<Tensor3> bad{Tensor3(Dims{2, 2, 1}, 0.5)};
    CHECK_THROWS_AS(CodedApertureSet(ApertureKind::binary, {2, 2, 3}, bad), ArgumentError);
    CHECK_NOTHROW(CodedApertureSet(ApertureKind::colored, {2, 2, 1}, bad));
  }
}

TEST_CASE("forward_shot examples") {
  const Tensor3 x(Dims{1, 2, 2}, {1, 2, 3, 4});
  const Tensor3 c(Dims{1, 2, 1}, {1, 1});
  // Independent route: the enumerated contributions.
  const auto brute = oracle::cassi_shot_brute(x, c);
  CHECK(brute == std::vector<double>{1, 5, 4});
  CHECK(forward_shot(x, c).storage() == brute);

  CHECK(forward_shot(x, Tensor3(Dims{1, 2, 1}, 0.0)).storage() == std::vector<double>{0, 0, 0});

  const Tensor3 x1 = oracle::random_tensor({3, 4, 1}, 5);
  CHECK(forward_shot(x1, Tensor3(Dims{3, 4, 1}, 1.0)).storage() == x1.storage());

  CHECK_THROWS_AS((void)forward_shot(x, Tensor3(Dims{1, 3, 1})), ShapeError);
}

TEST_CASE("forward stacks shots and is linear") {
  const Dims d{8, 8, 4};
  const Tensor3 x = oracle::random_tensor(d, 6, 0.0, 1.0);
  const auto one = generate_aperture(ApertureKind::binary, d, 1, 0.5, 7);
  const CodedApertureSet twice(ApertureKind::binary, d, {one.code(0), one.code(0)});
  const MeasurementSet m = forward(x, twice);
  CHECK(m.y().size() == 2 * 8 * (8 + 4 - 1));
  CHECK(m.shot(0) == m.shot(1));
  CHECK(m.shot(0).storage() == oracle::cassi_shot_brute(x, one.code(0)));

  for (std::size_t S = 1; S <= 4; ++S)
    for (auto kind : {ApertureKind::binary, ApertureKind::colored}) {
      const auto a = generate_aperture(kind, d, S, 0.5, 8 + S);
      CHECK(forward(x, a).y().size() == S * d.M * (d.N + d.L - 1));
    }

  const auto a = generate_aperture(ApertureKind::colored, d, 3, 0.5, 9);
  const Tensor3 z = oracle::random_tensor(d, 10);
  const double alpha = 1.7, beta = -0.4;
  Tensor3 mix = x;
  scale(mix.data(), alpha);
  axpy(beta, z.data(), mix.data());
  const auto lhs = apply_sensing(mix, a);
  auto rhs = apply_sensing(x, a);
  scale(rhs, alpha);
  axpy(beta, apply_sensing(z, a), rhs);
  CHECK(oracle::relative_error(lhs, rhs) <= 1e-12);
}

TEST_CASE("adjoint passes the dot-product test across shots and aperture kinds") {
  const Dims d{16, 16, 6};
  std::uint64_t seed = 100;
  int pairs = 0;
  for (std::size_t S = 1; S <= 4; ++S)
    for (auto kind : {ApertureKind::binary, ApertureKind::colored}) {
      const auto a = generate_aperture(kind, d, S, 0.5, seed++);
      for (int rep = 0; rep < 7; ++rep, ++pairs) {
        const Tensor3 x = oracle::random_tensor(d, seed++);
        Rng rng(seed++);
        std::vector<double> y(a.rows());
        for (double& v : y) v = rng.normal();
        const MeasurementSet m(S, d.M, d.N + d.L - 1, y);
        const double lhs = dot(forward(x, a).y(), y);
        const double rhs = dot(x.data(), adjoint(m, a, d).data());
        CHECK(std::abs(lhs - rhs) <= 1e-10 * norm2(x.data()) * norm2(y));
      }
    }
  CHECK(pairs >= 50);
}

TEST_CASE("adjoint of zero measurements is zero") {
  const Dims d{5, 6, 3};
  const auto a = generate_aperture(ApertureKind::binary, d, 2, 0.5, 1);
  const MeasurementSet m(2, 5, 8, std::vector<double>(2 * 5 * 8, 0.0));
  CHECK(adjoint(m, a, d) == Tensor3(d));
}

TEST_CASE("operator form matches the dense sensing matrix") {
  const Dims d{6, 6, 3};
  for (auto kind : {ApertureKind::binary, ApertureKind::colored}) {
    const auto a = generate_aperture(kind, d, 2, 0.5, 21);
    const Matrix h = build_dense_oracle(a, d);
    CHECK(h.rows() == 2 * 6 * (6 + 3 - 1));
    CHECK(h.cols() == 6 * 6 * 3);
    const Tensor3 x = oracle::random_tensor(d, 22);
    CHECK(oracle::max_abs_diff(dense_apply(h, vectorize(x)), forward(x, a).y()) <= 1e-12);
    Rng rng(23);
    std::vector<double> y(h.rows());
    for (double& v : y) v = rng.normal();
    const MeasurementSet m(2, 6, 8, y);
    CHECK(oracle::max_abs_diff(dense_apply_t(h, y), adjoint(m, a, d).data()) <= 1e-12);
  }
}

TEST_CASE("dense oracle structure") {
  SUBCASE("binary rows have at most L unit entries") {
    const Dims d{4, 5, 3};
    const auto a = generate_aperture(ApertureKind::binary, d, 2, 0.5, 30);
    const Matrix h = build_dense_oracle(a, d);
    for (std::size_t r = 0; r < h.rows(); ++r) {
      std::size_t nz = 0;
      for (std::size_t c = 0; c < h.cols(); ++c) {
        const double v = h(r, c);
        CHECK((v == 0.0 || v == 1.0));
        nz += v != 0.0;
      }
      CHECK(nz <= d.L);
    }
  }
  SUBCASE("single pixel, two bands, open code") {
    const CodedApertureSet a(ApertureKind::binary, {1, 1, 2}, {Tensor3(Dims{1, 1, 1}, 1.0)});
    CHECK(build_dense_oracle(a, {1, 1, 2}) == Matrix(2, 2, {1, 0, 0, 1}));
  }
  SUBCASE("cap") {
    const Dims d{20, 20, 20};
    const auto a = generate_aperture(ApertureKind::binary, d, 1, 0.5, 31);
    CHECK_THROWS_AS((void)build_dense_oracle(a, d), ArgumentError);
  }
}

TEST_CASE("binary codes are colored codes with identical planes") {
  const Dims d{7, 5, 4};
  const auto b = generate_aperture(ApertureKind::binary, d, 2, 0.5, 40);
  std::vector<Tensor3> planes;
  for (const Tensor3& c : b.codes()) {
    Tensor3 full(d);
    for (std::size_t l = 0; l < d.L; ++l)
      std::copy(c.data().begin(), c.data().end(), full.band(l).begin());
    planes.push_back(full);
  }
  const CodedApertureSet col(ApertureKind::colored, d, planes);
  const Tensor3 x = oracle::random_tensor(d, 41);
  CHECK(oracle::max_abs_diff(apply_sensing(x, b), apply_sensing(x, col)) <= 1e-12);
  const auto y = apply_sensing(x, b);
  CHECK(oracle::max_abs_diff(apply_sensing_adjoint(y, b).data(), apply_sensing_adjoint(y, col).data()) <= 1e-12);
}

TEST_CASE("noise injection") {
  const Dims d{64, 64, 8};
  const auto a = generate_aperture(ApertureKind::binary, d, 3, 0.5, 50);
  const MeasurementSet clean = forward(oracle::random_tensor(d, 51, 0.0, 1.0), a);
  REQUIRE(clean.y().size() >= 10000);

  const MeasurementSet same = add_noise(clean, kInf, 1);
  CHECK(std::equal(same.y().begin(), same.y().end(), clean.y().begin(), clean.y().end()));

  for (double snr : {20.0, 30.0}) {
    const MeasurementSet noisy = add_noise(clean, snr, 52);
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < clean.y().size(); ++i) {
      sig += clean.y()[i] * clean.y()[i];
      noise += (noisy.y()[i] - clean.y()[i]) * (noisy.y()[i] - clean.y()[i]);
    }
    CHECK(std::abs(10.0 * std::log10(sig / noise) - snr) <= 0.5);
    CHECK(noisy.provenance().snr_db == snr);
    // per-shot images are views of the stacked vector
    CHECK(noisy.shot(1).storage()[3] == noisy.y()[noisy.shot_size() + 3]);
  }
  const MeasurementSet n1 = add_noise(clean, 25.0, 9), n2 = add_noise(clean, 25.0, 9);
  CHECK(std::equal(n1.y().begin(), n1.y().end(), n2.y().begin()));

  const MeasurementSet zero(1, 2, 3, std::vector<double>(6, 0.0));
  CHECK_THROWS_AS((void)add_noise(zero, 20.0, 0), ArgumentError);
  CHECK(add_noise(zero, kInf, 0).y()[0] == 0.0);
}

TEST_CASE("compression check") {
  CHECK(is_compressive({32, 32, 8}, 1));
  CHECK(is_compressive({256, 256, 10}, 4));
  CHECK_FALSE(is_compressive({4, 4, 1}, 1));
  CHECK_FALSE(is_compressive({32, 32, 8}, 8));
}

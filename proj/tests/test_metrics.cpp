#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "csi/error.hpp"
#include "csi/metrics.hpp"
#include "oracles.hpp"

using namespace csi;

namespace {

// Direct 2-D SSIM of one band: full 11x11 Gaussian windows, no separability.
double ssim_band_brute(const Tensor3& a, const Tensor3& b, std::size_t l) {
  const Dims d = a.dims();
  double w[11][11], total = 0.0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) total += w[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / 4.5);
  const double c1 = 1e-4, c2 = 9e-4;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m + 11 <= d.M; ++m)
    for (std::size_t n = 0; n + 11 <= d.N; ++n) {
      double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double k = w[i][j] / total, x = a(m + i, n + j, l), y = b(m + i, n + j, l);
          mx += k * x;
          my += k * y;
          xx += k * x * x;
          yy += k * y * y;
          xy += k * x * y;
        }
      const double vx = xx - mx * mx, vy = yy - my * my, cxy = xy - mx * my;
      sum += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return sum / count;
}

Tensor3 checkerboard(Dims d, std::size_t cell) {
  Tensor3 t(d);
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < d.M; ++m)
      for (std::size_t n = 0; n < d.N; ++n) t(m, n, l) = ((m / cell + n / cell + l) % 2) ? 0.95 : 0.05;
  return t;
}

Tensor3 add_noise(const Tensor3& x, double sd, std::uint64_t seed) {
  Rng rng(seed);
  Tensor3 y = x;
  for (double& v : y.data()) v += sd * rng.normal();
  return y;
}

Tensor3 permute_bands(const Tensor3& x, const std::vector<std::size_t>& perm) {
  Tensor3 y(x.dims());
  for (std::size_t l = 0; l < perm.size(); ++l)
    std::copy(x.band(perm[l]).begin(), x.band(perm[l]).end(), y.band(l).begin());
  return y;
}

}  // namespace

TEST_CASE("psnr examples") {
  const Tensor3 ref = oracle::random_tensor({6, 5, 3}, 1, 0.0, 1.0);
  CHECK(psnr(ref, ref) == kPsnrCapDb);
  CHECK(psnr(Tensor3(Dims{4, 4, 2}, 1.0), Tensor3(Dims{4, 4, 2}, 0.9)) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(Tensor3(Dims{3, 1, 5}, 1.0), Tensor3(Dims{3, 1, 5}, 0.9)) == doctest::Approx(20.0).epsilon(1e-12));

  // equal per-band MSE: band average equals the scalar formula
  Tensor3 rec = ref;
  for (std::size_t i = 0; i < rec.size(); ++i) rec.data()[i] += (i % 2 ? 0.03 : -0.03);
  CHECK(psnr(ref, rec) == doctest::Approx(10.0 * std::log10(1.0 / (0.03 * 0.03))).epsilon(1e-12));

  // one exact band, one at 20 dB
  Tensor3 half = Tensor3(Dims{2, 2, 2}, 1.0), part = half;
  for (double& v : part.band(1)) v = 0.9;
  CHECK(psnr(half, part) == doctest::Approx(60.0).epsilon(1e-12));

  CHECK_THROWS_AS((void)psnr(ref, Tensor3(Dims{6, 5, 2})), ShapeError);
}

TEST_CASE("psnr decreases as noise grows") {
  const Tensor3 ref = oracle::random_tensor({16, 16, 4}, 2, 0.0, 1.0);
  double last = kPsnrCapDb + 1.0;
  for (double sd : {0.01, 0.05, 0.2}) {
    std::vector<double> vals;
    for (std::uint64_t s = 0; s < 5; ++s) vals.push_back(psnr(ref, add_noise(ref, sd, 10 + s)));
    std::nth_element(vals.begin(), vals.begin() + 2, vals.end());
    CHECK(vals[2] < last);
    last = vals[2];
  }
}

TEST_CASE("ssim") {
  const Tensor3 ref = oracle::random_tensor({14, 16, 2}, 3, 0.0, 1.0);
  CHECK(ssim(ref, ref) == 1.0);

  const Tensor3 rec = add_noise(ref, 0.1, 4);
  CHECK(ssim(ref, rec) == doctest::Approx(ssim(rec, ref)).epsilon(1e-12));
  CHECK(std::abs(ssim(ref, rec) - ssim(rec, ref)) <= 1e-12);
  const double brute = 0.5 * (ssim_band_brute(ref, rec, 0) + ssim_band_brute(ref, rec, 1));
  CHECK(std::abs(ssim(ref, rec) - brute) <= 1e-12);

  const Tensor3 board = checkerboard({24, 24, 2}, 3);
  Tensor3 inv = board;
  for (double& v : inv.data()) v = 1.0 - v;
  CHECK(ssim(board, inv) < 0.3);

  CHECK_THROWS_AS((void)ssim(Tensor3(Dims{10, 20, 1}), Tensor3(Dims{10, 20, 1})), ArgumentError);
  CHECK_THROWS_AS((void)ssim(ref, Tensor3(Dims{14, 16, 3})), ShapeError);
}

TEST_CASE("sam") {
  const Tensor3 ref = oracle::random_tensor({5, 4, 6}, 5, 0.1, 1.0);
  const SamResult same = sam(ref, ref);
  CHECK(same.mean_rad == 0.0);
  CHECK(same.skipped == 0);

  Tensor3 scaled = ref;
  scale(scaled.data(), 3.5);
  CHECK(sam(ref, scaled).mean_rad <= 1e-12);

  Tensor3 a(Dims{3, 3, 2}), b(Dims{3, 3, 2});
  for (double& v : a.band(0)) v = 0.7;
  for (double& v : b.band(1)) v = 0.2;
  CHECK(sam(a, b).mean_rad == doctest::Approx(std::numbers::pi / 2).epsilon(1e-14));

  Tensor3 holes = ref;
  for (std::size_t l = 0; l < 6; ++l) holes(2, 1, l) = 0.0;
  const SamResult r = sam(ref, holes);
  CHECK(r.skipped == 1);
  CHECK(r.mean_rad == 0.0);
  CHECK(sam(Tensor3(Dims{2, 2, 3}), Tensor3(Dims{2, 2, 3})).skipped == 4);
}

TEST_CASE("metric ranges and band permutation equivariance") {
  const Tensor3 ref = oracle::random_tensor({16, 16, 5}, 6, 0.0, 1.0);
  const Tensor3 rec = oracle::random_tensor({16, 16, 5}, 7, -0.5, 1.5);
  const QualityRow q = evaluate("x", ref, rec);
  CHECK(q.psnr_db <= kPsnrCapDb);
  CHECK(q.ssim >= -1.0);
  CHECK(q.ssim <= 1.0);
  CHECK(q.sam_rad >= 0.0);
  CHECK(q.sam_rad <= std::numbers::pi);

  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const Tensor3 pr = permute_bands(ref, perm), pc = permute_bands(rec, perm);
  CHECK(psnr(pr, pc) == doctest::Approx(q.psnr_db).epsilon(1e-12));
  CHECK(ssim(pr, pc) == doctest::Approx(q.ssim).epsilon(1e-12));
  CHECK(sam(pr, pc).mean_rad == doctest::Approx(q.sam_rad).epsilon(1e-12));
}

TEST_CASE("csv rows") {
  CHECK(csv_header() == "name,psnr_db,ssim,sam_rad");
  const Tensor3 ref = oracle::random_tensor({12, 12, 2}, 8, 0.0, 1.0);
  const std::string row = csv_row(evaluate("same", ref, ref));
  CHECK(row == "same,100.000000,1.000000,0.000000");
}

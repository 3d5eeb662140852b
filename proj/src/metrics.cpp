#include "csi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "csi/error.hpp"

namespace csi {

namespace {

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void same_dims(const Tensor3& a, const Tensor3& b, const char* who) {
  if (!(a.dims() == b.dims())) throw ShapeError(std::string(who) + ": inputs differ in shape");
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  const double c = (kWindow - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable filtering of one band; output is (M-10) x (N-10).
std::vector<double> filter_valid(std::span<const double> img, std::size_t M, std::size_t N,
                                 const std::vector<double>& g) {
  const std::size_t om = M - kWindow + 1, on = N - kWindow + 1;
  std::vector<double> rows(M * on);
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t n = 0; n < on; ++n) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * img[m * N + n + k];
      rows[m * on + n] = acc;
    }
  std::vector<double> out(om * on);
  for (std::size_t m = 0; m < om; ++m)
    for (std::size_t n = 0; n < on; ++n) {
      double acc = 0.0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * rows[(m + k) * on + n];
      out[m * on + n] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Tensor3& ref, const Tensor3& rec) {
  same_dims(ref, rec, "psnr");
  const Dims& d = ref.dims();
  double total = 0.0;
  for (std::size_t l = 0; l < d.L; ++l) {
    const auto a = ref.band(l), b = rec.band(l);
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
    const double mse = se / static_cast<double>(a.size());
    total += mse == 0.0 ? kPsnrCapDb : std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
  }
  return total / static_cast<double>(d.L);
}

double ssim(const Tensor3& ref, const Tensor3& rec) {
  same_dims(ref, rec, "ssim");
  const Dims& d = ref.dims();
  if (d.M < kWindow || d.N < kWindow)
    throw ArgumentError("ssim needs spatial extents of at least 11, got " + std::to_string(d.M) + "x" +
                        std::to_string(d.N));
  const auto g = gaussian_window();
  const std::size_t plane = d.plane();
  std::vector<double> xx(plane), yy(plane), xy(plane);
  double total = 0.0;
  for (std::size_t l = 0; l < d.L; ++l) {
    const auto x = ref.band(l), y = rec.band(l);
    for (std::size_t i = 0; i < plane; ++i) {
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, d.M, d.N, g), my = filter_valid(y, d.M, d.N, g);
    const auto sxx = filter_valid(xx, d.M, d.N, g), syy = filter_valid(yy, d.M, d.N, g);
    const auto sxy = filter_valid(xy, d.M, d.N, g);
    double band = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      band += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
              ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    total += band / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(d.L);
}

SamResult sam(const Tensor3& ref, const Tensor3& rec) {
  same_dims(ref, rec, "sam");
  const Dims& d = ref.dims();
  SamResult r;
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> a(d.L), b(d.L);
  for (std::size_t m = 0; m < d.M; ++m)
    for (std::size_t n = 0; n < d.N; ++n) {
      for (std::size_t l = 0; l < d.L; ++l) {
        a[l] = ref(m, n, l);
        b[l] = rec(m, n, l);
      }
      const double na = norm2(a), nb = norm2(b);
      if (na == 0.0 || nb == 0.0) {
        ++r.skipped;
        continue;
      }
      // angle = 2 atan2(|a^ - b^|, |a^ + b^|) with unit vectors a^, b^; same
      // value as acos(<a,b>/|a||b|) without the cancellation near zero.
      double diff = 0.0, sum = 0.0;
      for (std::size_t l = 0; l < d.L; ++l) {
        const double ua = a[l] / na, ub = b[l] / nb;
        diff += (ua - ub) * (ua - ub);
        sum += (ua + ub) * (ua + ub);
      }
      total += 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
      ++counted;
    }
  r.mean_rad = counted == 0 ? 0.0 : total / static_cast<double>(counted);
  return r;
}

QualityRow evaluate(const std::string& name, const Tensor3& ref, const Tensor3& rec) {
  return {name, psnr(ref, rec), ssim(ref, rec), sam(ref, rec).mean_rad};
}

std::string csv_header() { return "name,psnr_db,ssim,sam_rad"; }

std::string csv_row(const QualityRow& row) {
  char buf[160];
  std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f", row.psnr_db, row.ssim, row.sam_rad);
  return row.name + buf;
}

}  // namespace csi

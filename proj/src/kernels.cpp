#include "csi/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace csi::kernels {

namespace {

using idx = std::ptrdiff_t;

// Output rows [lo, hi) whose source row o + shift stays inside [0, extent).
inline void valid_range(idx extent, idx shift, idx& lo, idx& hi) {
  lo = std::max<idx>(0, -shift);
  hi = std::min<idx>(extent, extent - shift);
}

inline std::size_t widx(const ConvShape& s, std::size_t co, std::size_t ci, std::size_t ky,
                        std::size_t kx) {
  return ((co * s.in_channels + ci) * s.k + ky) * s.k + kx;
}

}  // namespace

namespace serial {

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const idx R = s.rows, C = s.cols, r = s.k / 2;
  const std::size_t plane = s.rows * s.cols;
  for (std::size_t co = 0; co < s.out_channels; ++co)
    for (idx m = 0; m < R; ++m)
      for (idx n = 0; n < C; ++n) {
        double acc = bias.empty() ? 0.0 : bias[co];
        for (std::size_t ci = 0; ci < s.in_channels; ++ci)
          for (std::size_t ky = 0; ky < s.k; ++ky)
            for (std::size_t kx = 0; kx < s.k; ++kx) {
              const idx sm = m + static_cast<idx>(ky) - r;
              const idx sn = n + static_cast<idx>(kx) - r;
              if (sm < 0 || sm >= R || sn < 0 || sn >= C) continue;
              acc += weight[widx(s, co, ci, ky, kx)] * in[ci * plane + sm * C + sn];
            }
        out[co * plane + m * C + n] = acc;
      }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in) {
  const idx R = s.rows, C = s.cols, r = s.k / 2;
  const std::size_t plane = s.rows * s.cols;
  for (std::size_t ci = 0; ci < s.in_channels; ++ci)
    for (idx m = 0; m < R; ++m)
      for (idx n = 0; n < C; ++n) {
        double acc = 0.0;
        for (std::size_t co = 0; co < s.out_channels; ++co)
          for (std::size_t ky = 0; ky < s.k; ++ky)
            for (std::size_t kx = 0; kx < s.k; ++kx) {
              const idx om = m - static_cast<idx>(ky) + r;
              const idx on = n - static_cast<idx>(kx) + r;
              if (om < 0 || om >= R || on < 0 || on >= C) continue;
              acc += weight[widx(s, co, ci, ky, kx)] * grad_out[co * plane + om * C + on];
            }
        grad_in[ci * plane + m * C + n] = acc;
      }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> in,
                            std::span<const double> grad_out, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
  const idx R = s.rows, C = s.cols, r = s.k / 2;
  const std::size_t plane = s.rows * s.cols;
  for (std::size_t co = 0; co < s.out_channels; ++co) {
    if (!grad_bias.empty()) {
      double acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) acc += grad_out[co * plane + p];
      grad_bias[co] += acc;
    }
    for (std::size_t ci = 0; ci < s.in_channels; ++ci)
      for (std::size_t ky = 0; ky < s.k; ++ky)
        for (std::size_t kx = 0; kx < s.k; ++kx) {
          double acc = 0.0;
          for (idx m = 0; m < R; ++m)
            for (idx n = 0; n < C; ++n) {
              const idx sm = m + static_cast<idx>(ky) - r;
              const idx sn = n + static_cast<idx>(kx) - r;
              if (sm < 0 || sm >= R || sn < 0 || sn >= C) continue;
              acc += grad_out[co * plane + m * C + n] * in[ci * plane + sm * C + sn];
            }
          grad_weight[widx(s, co, ci, ky, kx)] += acc;
        }
  }
}

void cassi_forward(const ShotShape& s, std::span<const double> scene, std::span<const double> code,
                   std::span<double> det) {
  const std::size_t dc = s.det_cols(), plane = s.rows * s.cols;
  for (std::size_t m = 0; m < s.rows; ++m)
    for (std::size_t j = 0; j < dc; ++j) {
      double acc = 0.0;
      for (std::size_t l = 0; l < s.bands; ++l) {
        if (j < l || j - l >= s.cols) continue;
        const std::size_t n = j - l;
        const std::size_t cp = s.code_planes == 1 ? 0 : l;
        acc += scene[l * plane + m * s.cols + n] * code[cp * plane + m * s.cols + n];
      }
      det[m * dc + j] = acc;
    }
}

void cassi_adjoint_accumulate(const ShotShape& s, std::span<const double> det,
                              std::span<const double> code, std::span<double> scene) {
  const std::size_t dc = s.det_cols(), plane = s.rows * s.cols;
  for (std::size_t l = 0; l < s.bands; ++l)
    for (std::size_t m = 0; m < s.rows; ++m)
      for (std::size_t n = 0; n < s.cols; ++n) {
        const std::size_t cp = s.code_planes == 1 ? 0 : l;
        scene[l * plane + m * s.cols + n] +=
            code[cp * plane + m * s.cols + n] * det[m * dc + n + l];
      }
}

}  // namespace serial

namespace parallel {

void conv2d_forward(const ConvShape& s, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const idx R = s.rows, C = s.cols, r = s.k / 2;
  const std::size_t plane = s.rows * s.cols;
  const idx cout = s.out_channels;
#pragma omp parallel for schedule(static)
  for (idx co = 0; co < cout; ++co) {
    double* o = out.data() + co * plane;
    std::fill(o, o + plane, bias.empty() ? 0.0 : bias[co]);
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      const double* src = in.data() + ci * plane;
      for (std::size_t ky = 0; ky < s.k; ++ky) {
        idx m0, m1;
        valid_range(R, static_cast<idx>(ky) - r, m0, m1);
        for (std::size_t kx = 0; kx < s.k; ++kx) {
          const double w = weight[widx(s, co, ci, ky, kx)];
          const idx dy = static_cast<idx>(ky) - r, dx = static_cast<idx>(kx) - r;
          idx n0, n1;
          valid_range(C, dx, n0, n1);
          for (idx m = m0; m < m1; ++m) {
            double* orow = o + m * C;
            const double* srow = src + (m + dy) * C + dx;
            for (idx n = n0; n < n1; ++n) orow[n] += w * srow[n];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in) {
  const idx R = s.rows, C = s.cols, r = s.k / 2;
  const std::size_t plane = s.rows * s.cols;
  const idx cin = s.in_channels;
#pragma omp parallel for schedule(static)
  for (idx ci = 0; ci < cin; ++ci) {
    double* gi = grad_in.data() + ci * plane;
    std::fill(gi, gi + plane, 0.0);
    for (std::size_t co = 0; co < s.out_channels; ++co) {
      const double* go = grad_out.data() + co * plane;
      for (std::size_t ky = 0; ky < s.k; ++ky) {
        const idx dy = r - static_cast<idx>(ky);
        idx m0, m1;
        valid_range(R, dy, m0, m1);
        for (std::size_t kx = 0; kx < s.k; ++kx) {
          const double w = weight[widx(s, co, ci, ky, kx)];
          const idx dx = r - static_cast<idx>(kx);
          idx n0, n1;
          valid_range(C, dx, n0, n1);
          for (idx m = m0; m < m1; ++m) {
            double* grow = gi + m * C;
            const double* orow = go + (m + dy) * C + dx;
            for (idx n = n0; n < n1; ++n) grow[n] += w * orow[n];
          }
        }
      }
    }
  }
}

void conv2d_backward_params(const ConvShape& s, std::span<const double> in,
                            std::span<const double> grad_out, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
  const idx R = s.rows, C = s.cols, r = s.k / 2;
  const std::size_t plane = s.rows * s.cols;
  const idx cout = s.out_channels;
#pragma omp parallel for schedule(static)
  for (idx co = 0; co < cout; ++co) {
    const double* go = grad_out.data() + co * plane;
    if (!grad_bias.empty()) {
      double acc = 0.0;
      for (std::size_t p = 0; p < plane; ++p) acc += go[p];
      grad_bias[co] += acc;
    }
    for (std::size_t ci = 0; ci < s.in_channels; ++ci) {
      const double* src = in.data() + ci * plane;
      for (std::size_t ky = 0; ky < s.k; ++ky) {
        const idx dy = static_cast<idx>(ky) - r;
        idx m0, m1;
        valid_range(R, dy, m0, m1);
        for (std::size_t kx = 0; kx < s.k; ++kx) {
          const idx dx = static_cast<idx>(kx) - r;
          idx n0, n1;
          valid_range(C, dx, n0, n1);
          double acc = 0.0;
          for (idx m = m0; m < m1; ++m) {
            const double* orow = go + m * C;
            const double* srow = src + (m + dy) * C + dx;
            for (idx n = n0; n < n1; ++n) acc += orow[n] * srow[n];
          }
          grad_weight[widx(s, co, ci, ky, kx)] += acc;
        }
      }
    }
  }
}

void cassi_forward(const ShotShape& s, std::span<const double> scene, std::span<const double> code,
                   std::span<double> det) {
  const std::size_t dc = s.det_cols(), plane = s.rows * s.cols;
  const idx rows = s.rows;
#pragma omp parallel for schedule(static)
  for (idx m = 0; m < rows; ++m) {
    double* d = det.data() + m * dc;
    std::fill(d, d + dc, 0.0);
    for (std::size_t l = 0; l < s.bands; ++l) {
      const double* x = scene.data() + l * plane + m * s.cols;
      const double* c = code.data() + (s.code_planes == 1 ? 0 : l) * plane + m * s.cols;
      double* dl = d + l;
      for (std::size_t n = 0; n < s.cols; ++n) dl[n] += x[n] * c[n];
    }
  }
}

void cassi_adjoint_accumulate(const ShotShape& s, std::span<const double> det,
                              std::span<const double> code, std::span<double> scene) {
  const std::size_t dc = s.det_cols(), plane = s.rows * s.cols;
  const idx bands = s.bands;
#pragma omp parallel for schedule(static)
  for (idx l = 0; l < bands; ++l) {
    const double* c = code.data() + (s.code_planes == 1 ? 0 : l) * plane;
    double* x = scene.data() + l * plane;
    for (std::size_t m = 0; m < s.rows; ++m) {
      const double* d = det.data() + m * dc + l;
      for (std::size_t n = 0; n < s.cols; ++n) x[m * s.cols + n] += c[m * s.cols + n] * d[n];
    }
  }
}

}  // namespace parallel

}  // namespace csi::kernels

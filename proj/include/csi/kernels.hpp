#pragma once

// Data-parallel inner loops shared by the sensing model and the generator.
//
// Every kernel exists twice: `serial` is a direct transcription of the
// defining sums, kept as the reference the tests compare against, and
// `parallel` is the tap-major OpenMP version the library calls. Each output
// element of a parallel kernel is owned by one thread and accumulated in a
// fixed order, so results do not depend on the thread count.
//
// Layouts: feature maps are band-major (channel planes of rows x cols, row
// major). Convolution weights are [out][in][k][k]; kernels are square with odd
// size k, stride 1 and zero "same" padding.

#include <cstddef>
#include <span>

namespace csi::kernels {

struct ConvShape {
  std::size_t rows;
  std::size_t cols;
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t k;
};

/// Shape of one CASSI shot: scene rows x cols x bands. `code_planes` is 1 for
/// a spatial code shared by all bands, or `bands` for a spectral code.
struct ShotShape {
  std::size_t rows;
  std::size_t cols;
  std::size_t bands;
  std::size_t code_planes;
  std::size_t det_cols() const { return cols + bands - 1; }
};

namespace serial {
// out = conv(in, w) + b; `bias` may be empty.
void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> out);
// grad_in = conv^T(grad_out): full correlation with the flipped kernel.
void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in);
// Accumulates (+=) into the weight and bias gradients. `grad_bias` may be empty.
void conv2d_backward_params(const ConvShape& s, std::span<const double> in,
                            std::span<const double> grad_out,
                            std::span<double> grad_weight, std::span<double> grad_bias);
// det = sum_l shift_l(X_l .* C_l), rows x det_cols, overwritten.
void cassi_forward(const ShotShape& s, std::span<const double> scene,
                   std::span<const double> code, std::span<double> det);
// scene += transpose of cassi_forward applied to det.
void cassi_adjoint_accumulate(const ShotShape& s, std::span<const double> det,
                              std::span<const double> code, std::span<double> scene);
}  // namespace serial

namespace parallel {
// Same contracts as serial::.
void conv2d_forward(const ConvShape& s, std::span<const double> in,
                    std::span<const double> weight, std::span<const double> bias,
                    std::span<double> out);
void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in);
void conv2d_backward_params(const ConvShape& s, std::span<const double> in,
                            std::span<const double> grad_out,
                            std::span<double> grad_weight, std::span<double> grad_bias);
void cassi_forward(const ShotShape& s, std::span<const double> scene,
                   std::span<const double> code, std::span<double> det);
void cassi_adjoint_accumulate(const ShotShape& s, std::span<const double> det,
                              std::span<const double> code, std::span<double> scene);
}  // namespace parallel

}  // namespace csi::kernels

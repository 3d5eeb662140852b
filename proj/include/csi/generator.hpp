#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csi/tensor.hpp"

namespace csi {

enum class Architecture { resnet, autoencoder, custom };

const char* to_string(Architecture arch);
Architecture parse_architecture(const std::string& name);

enum class LayerOp { conv2d, relu, sigmoid, skip_add, downsample2, upsample2 };

struct LayerSpec {
  LayerOp op;
  std::size_t in_channels = 0;   // conv2d only
  std::size_t out_channels = 0;  // conv2d only
  std::size_t kernel = 3;        // conv2d only, odd
  bool bias = true;              // conv2d only
};

struct ConvWeights {
  std::vector<double> weight;  // [out][in][k][k]
  std::vector<double> bias;    // [out], empty when the layer has no bias
};

/// Parameters theta of the generator. `conv` holds one entry per conv2d layer,
/// in layer order.
struct GeneratorParams {
  Architecture arch = Architecture::custom;
  std::size_t channels = 0;  // spectral bands at input and output
  std::size_t width = 0;
  std::uint64_t seed = 0;
  std::vector<LayerSpec> layers;
  std::vector<ConvWeights> conv;

  std::size_t parameter_count() const;
  std::size_t conv_layer_count() const { return conv.size(); }
  // Every learnable array, in a fixed order (weight then bias, per conv).
  std::vector<std::span<double>> arrays();
  std::vector<std::span<const double>> arrays() const;
};

struct GeneratorGradients {
  std::vector<ConvWeights> conv;
  std::vector<std::span<double>> arrays();
  std::vector<std::span<const double>> arrays() const;
};

/// Intermediates of one forward pass. A tape can be replayed backwards once.
class Tape {
 public:
  bool consumed() const { return consumed_; }

 private:
  friend std::pair<Tensor3, Tape> generator_forward(const GeneratorParams&, const Tensor3&);
  friend std::pair<GeneratorGradients, Tensor3> generator_backward(Tape&, const Tensor3&);

  GeneratorParams params_;
  Tensor3 input_;
  std::vector<Tensor3> layer_inputs_;
  Dims output_dims_;
  bool consumed_ = false;
};

/// resnet: conv(L->w) relu conv(w->w) relu conv(w->w) relu conv(w->L) +input sigmoid.
/// autoencoder: conv(L->w) relu down conv(w->2w) relu down conv(2w->2w) relu up
///   conv(2w->w) relu up conv(w->w) relu conv(w->L) sigmoid.
/// Weights are He-initialised from `seed`, biases start at zero.
GeneratorParams build_generator(Architecture arch, std::size_t channels, std::size_t width,
                                std::uint64_t seed);

/// Arbitrary layer stacks, used to check layers in isolation.
GeneratorParams build_custom(std::vector<LayerSpec> layers, std::size_t channels,
                             std::uint64_t seed);

std::pair<Tensor3, Tape> generator_forward(const GeneratorParams& p, const Tensor3& z);

/// Reverse pass for an upstream gradient `grad_out` of the forward output.
/// Returns parameter gradients and the gradient with respect to the input.
std::pair<GeneratorGradients, Tensor3> generator_backward(Tape& tape, const Tensor3& grad_out);

}  // namespace csi

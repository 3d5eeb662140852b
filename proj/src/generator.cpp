#include "csi/generator.hpp"

#include <cmath>
#include <string>

#include "csi/error.hpp"
#include "csi/kernels.hpp"
#include "csi/random.hpp"

namespace csi {

namespace {

LayerSpec conv(std::size_t in, std::size_t out) { return {LayerOp::conv2d, in, out, 3, true}; }
LayerSpec op(LayerOp o) { return {o}; }

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

kernels::ConvShape conv_shape(const Dims& in, const LayerSpec& s) {
  return {in.M, in.N, s.in_channels, s.out_channels, s.kernel};
}

// Checks the stack against an input with `channels` bands and fills in weights.
void initialise(GeneratorParams& p) {
  std::size_t ch = p.channels;
  if (ch == 0) throw ArgumentError("generator needs at least one channel");
  Rng rng(p.seed);
  p.conv.clear();
  for (const LayerSpec& s : p.layers) {
    switch (s.op) {
      case LayerOp::conv2d: {
        if (s.in_channels == 0 || s.out_channels == 0)
          throw ArgumentError("conv2d channel counts must be positive");
        if (s.kernel % 2 == 0) throw ArgumentError("conv2d kernel size must be odd");
        if (s.in_channels != ch)
          throw ShapeError("conv2d expects " + std::to_string(s.in_channels) + " channels, stack provides " +
                           std::to_string(ch));
        ConvWeights w;
        w.weight.resize(s.out_channels * s.in_channels * s.kernel * s.kernel);
        const double stddev =
            std::sqrt(2.0 / static_cast<double>(s.in_channels * s.kernel * s.kernel));
        for (double& v : w.weight) v = rng.normal(0.0, stddev);
        if (s.bias) w.bias.assign(s.out_channels, 0.0);
        p.conv.push_back(std::move(w));
        ch = s.out_channels;
        break;
      }
      case LayerOp::skip_add:
        if (ch != p.channels) throw ShapeError("skip-add needs as many channels as the network input");
        break;
      default:
        break;
    }
  }
}

std::vector<std::span<double>> spans_of(std::vector<ConvWeights>& conv) {
  std::vector<std::span<double>> out;
  for (auto& c : conv) {
    out.emplace_back(c.weight);
    if (!c.bias.empty()) out.emplace_back(c.bias);
  }
  return out;
}

std::vector<std::span<const double>> spans_of(const std::vector<ConvWeights>& conv) {
  std::vector<std::span<const double>> out;
  for (const auto& c : conv) {
    out.emplace_back(c.weight);
    if (!c.bias.empty()) out.emplace_back(c.bias);
  }
  return out;
}

Tensor3 downsample2(const Tensor3& x) {
  const Dims& d = x.dims();
  if (d.M % 2 != 0 || d.N % 2 != 0)
    throw ArgumentError("downsample2 needs even spatial extents, got " + std::to_string(d.M) + "x" +
                        std::to_string(d.N));
  Tensor3 y(Dims{d.M / 2, d.N / 2, d.L});
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < d.M / 2; ++m)
      for (std::size_t n = 0; n < d.N / 2; ++n)
        y(m, n, l) = 0.25 * (x(2 * m, 2 * n, l) + x(2 * m, 2 * n + 1, l) + x(2 * m + 1, 2 * n, l) +
                             x(2 * m + 1, 2 * n + 1, l));
  return y;
}

Tensor3 downsample2_transpose(const Tensor3& g) {
  const Dims& d = g.dims();
  Tensor3 x(Dims{d.M * 2, d.N * 2, d.L});
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < 2 * d.M; ++m)
      for (std::size_t n = 0; n < 2 * d.N; ++n) x(m, n, l) = 0.25 * g(m / 2, n / 2, l);
  return x;
}

Tensor3 upsample2(const Tensor3& x) {
  const Dims& d = x.dims();
  Tensor3 y(Dims{d.M * 2, d.N * 2, d.L});
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < 2 * d.M; ++m)
      for (std::size_t n = 0; n < 2 * d.N; ++n) y(m, n, l) = x(m / 2, n / 2, l);
  return y;
}

Tensor3 upsample2_transpose(const Tensor3& g) {
  const Dims& d = g.dims();
  Tensor3 x(Dims{d.M / 2, d.N / 2, d.L});
  for (std::size_t l = 0; l < d.L; ++l)
    for (std::size_t m = 0; m < d.M / 2; ++m)
      for (std::size_t n = 0; n < d.N / 2; ++n)
        x(m, n, l) = g(2 * m, 2 * n, l) + g(2 * m, 2 * n + 1, l) + g(2 * m + 1, 2 * n, l) +
                     g(2 * m + 1, 2 * n + 1, l);
  return x;
}

}  // namespace

const char* to_string(Architecture arch) {
  switch (arch) {
    case Architecture::resnet:
      return "resnet";
    case Architecture::autoencoder:
      return "autoencoder";
    default:
      return "custom";
  }
}

Architecture parse_architecture(const std::string& name) {
  if (name == "resnet") return Architecture::resnet;
  if (name == "autoencoder") return Architecture::autoencoder;
  throw ArgumentError("unknown architecture '" + name + "' (expected resnet or autoencoder)");
}

std::size_t GeneratorParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : conv) n += c.weight.size() + c.bias.size();
  return n;
}

std::vector<std::span<double>> GeneratorParams::arrays() { return spans_of(conv); }
std::vector<std::span<const double>> GeneratorParams::arrays() const { return spans_of(conv); }
std::vector<std::span<double>> GeneratorGradients::arrays() { return spans_of(conv); }
std::vector<std::span<const double>> GeneratorGradients::arrays() const { return spans_of(conv); }

GeneratorParams build_generator(Architecture arch, std::size_t channels, std::size_t width,
                                std::uint64_t seed) {
  if (width < 1) throw ArgumentError("generator width must be at least 1");
  GeneratorParams p;
  p.arch = arch;
  p.channels = channels;
  p.width = width;
  p.seed = seed;
  const std::size_t L = channels, w = width;
  switch (arch) {
    case Architecture::resnet:
      p.layers = {conv(L, w),   op(LayerOp::relu), conv(w, w),
                  op(LayerOp::relu), conv(w, w),   op(LayerOp::relu),
                  conv(w, L),   op(LayerOp::skip_add), op(LayerOp::sigmoid)};
      break;
    case Architecture::autoencoder:
      p.layers = {conv(L, w),         op(LayerOp::relu),      op(LayerOp::downsample2),
                  conv(w, 2 * w),     op(LayerOp::relu),      op(LayerOp::downsample2),
                  conv(2 * w, 2 * w), op(LayerOp::relu),      op(LayerOp::upsample2),
                  conv(2 * w, w),     op(LayerOp::relu),      op(LayerOp::upsample2),
                  conv(w, w),         op(LayerOp::relu),      conv(w, L),
                  op(LayerOp::sigmoid)};
      break;
    default:
      throw ArgumentError("build_generator needs resnet or autoencoder; use build_custom");
  }
  initialise(p);
  return p;
}

GeneratorParams build_custom(std::vector<LayerSpec> layers, std::size_t channels,
                             std::uint64_t seed) {
  GeneratorParams p;
  p.channels = channels;
  p.seed = seed;
  p.layers = std::move(layers);
  initialise(p);
  return p;
}

std::pair<Tensor3, Tape> generator_forward(const GeneratorParams& p, const Tensor3& z) {
  const Dims& d = z.dims();
  if (d.L != p.channels)
    throw ShapeError("generator expects " + std::to_string(p.channels) + " input channels, got " +
                     std::to_string(d.L));
  if (p.arch == Architecture::autoencoder && (d.M % 4 != 0 || d.N % 4 != 0))
    throw ArgumentError("autoencoder needs spatial extents that are multiples of 4, got " +
                        std::to_string(d.M) + "x" + std::to_string(d.N));

  Tape tape;
  tape.params_ = p;
  tape.input_ = z;
  tape.layer_inputs_.reserve(p.layers.size());

  Tensor3 x = z;
  std::size_t ci = 0;
  for (const LayerSpec& s : p.layers) {
    Tensor3 y;
    switch (s.op) {
      case LayerOp::conv2d: {
        const ConvWeights& w = p.conv[ci++];
        y = Tensor3(Dims{x.dims().M, x.dims().N, s.out_channels});
        kernels::parallel::conv2d_forward(conv_shape(x.dims(), s), x.data(), w.weight, w.bias, y.data());
        break;
      }
      case LayerOp::relu:
        y = x;
        for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerOp::sigmoid:
        y = x;
        for (double& v : y.data()) v = sigmoid(v);
        break;
      case LayerOp::skip_add:
        if (!(x.dims() == z.dims())) throw ShapeError("skip-add operands differ in shape");
        y = x;
        axpy(1.0, z.data(), y.data());
        break;
      case LayerOp::downsample2:
        y = downsample2(x);
        break;
      case LayerOp::upsample2:
        y = upsample2(x);
        break;
    }
    tape.layer_inputs_.push_back(std::move(x));
    x = std::move(y);
  }
  tape.output_dims_ = x.dims();
  return {std::move(x), std::move(tape)};
}

std::pair<GeneratorGradients, Tensor3> generator_backward(Tape& tape, const Tensor3& grad_out) {
  if (tape.consumed_) throw UsageError("tape has already been consumed by a reverse pass");
  if (!(grad_out.dims() == tape.output_dims_)) throw ShapeError("output gradient has the wrong extents");
  tape.consumed_ = true;

  const GeneratorParams& p = tape.params_;
  GeneratorGradients grads;
  grads.conv.resize(p.conv.size());
  for (std::size_t i = 0; i < p.conv.size(); ++i) {
    grads.conv[i].weight.assign(p.conv[i].weight.size(), 0.0);
    grads.conv[i].bias.assign(p.conv[i].bias.size(), 0.0);
  }

  Tensor3 g_input(tape.input_.dims());
  Tensor3 g = grad_out;
  std::size_t ci = p.conv.size();
  for (std::size_t k = p.layers.size(); k-- > 0;) {
    const LayerSpec& s = p.layers[k];
    const Tensor3& x = tape.layer_inputs_[k];
    switch (s.op) {
      case LayerOp::conv2d: {
        --ci;
        const auto shape = conv_shape(x.dims(), s);
        kernels::parallel::conv2d_backward_params(shape, x.data(), g.data(), grads.conv[ci].weight,
                                                  grads.conv[ci].bias);
        Tensor3 gi(x.dims());
        kernels::parallel::conv2d_backward_input(shape, g.data(), p.conv[ci].weight, gi.data());
        g = std::move(gi);
        break;
      }
      case LayerOp::relu: {
        auto gv = g.data();
        const auto xv = x.data();
        for (std::size_t i = 0; i < gv.size(); ++i)
          if (!(xv[i] > 0.0)) gv[i] = 0.0;
        break;
      }
      case LayerOp::sigmoid: {
        auto gv = g.data();
        const auto xv = x.data();
        for (std::size_t i = 0; i < gv.size(); ++i) {
          const double sv = sigmoid(xv[i]);
          gv[i] *= sv * (1.0 - sv);
        }
        break;
      }
      case LayerOp::skip_add:
        axpy(1.0, g.data(), g_input.data());
        break;
      case LayerOp::downsample2:
        g = downsample2_transpose(g);
        break;
      case LayerOp::upsample2:
        g = upsample2_transpose(g);
        break;
    }
  }
  axpy(1.0, g.data(), g_input.data());

  tape.layer_inputs_.clear();
  tape.layer_inputs_.shrink_to_fit();
  return {std::move(grads), std::move(g_input)};
}

}  // namespace csi

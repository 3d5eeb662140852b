#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csi/cassi.hpp"
#include "csi/generator.hpp"
#include "csi/tucker.hpp"

namespace csi {

enum class FitMode {
  full,       // optimise generator weights and the Tucker latent
  dip_fixed,  // optimise generator weights only; the latent stays at its random init
};

enum class OptimizerKind { adam, sgd };

const char* to_string(FitMode mode);
FitMode parse_fit_mode(const std::string& name);

struct FitConfig {
  std::size_t iterations = 3000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  OptimizerKind optimizer = OptimizerKind::adam;
  double rho = 0.5;
  Architecture arch = Architecture::resnet;
  std::size_t width = 0;  // 0 selects the architecture default (7 resnet, 16 autoencoder)
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
  FitMode mode = FitMode::full;
  std::size_t log_stride = 10;

  void validate() const;
  std::size_t effective_width() const;
};

/// Everything the optimiser updates.
struct FitState {
  GeneratorParams generator;
  TuckerLatent latent;
};

struct FitGradients {
  GeneratorGradients generator;
  std::optional<LatentGradients> latent;  // absent in dip_fixed mode
};

struct LossEval {
  double loss = 0.0;
  Tensor3 reconstruction;
  FitGradients gradients;
};

/// Initial state of one trajectory, derived from (seed, restart index).
FitState init_state(Dims dims, const FitConfig& cfg, std::size_t restart);

/// Reconstruction X = M_theta(expand(latent)).
Tensor3 reconstruct(const FitState& state);

/// 0.5 * ||y - H vect(X)||^2 for the current state.
double data_loss(const FitState& state, std::span<const double> y, const CodedApertureSet& a);

/// Loss and gradient through sensing adjoint, generator reverse pass and the
/// Tucker backprop. Latent gradients are skipped in dip_fixed mode.
LossEval loss_and_grad(const FitState& state, std::span<const double> y, const CodedApertureSet& a,
                       FitMode mode = FitMode::full);

/// Per-array first/second moments for the adaptive-moment update.
class Optimizer {
 public:
  Optimizer(const FitConfig& cfg, const FitState& state);

  /// Applies one update; `iteration` counts from 0. Throws NumericalError on a
  /// non-finite gradient, leaving the state untouched.
  void step(FitState& state, const FitGradients& grads, std::size_t iteration);

 private:
  FitConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
};

struct TracePoint {
  std::size_t iteration;
  double loss;
  double psnr;  // NaN without a ground truth
};

struct FitResult {
  Tensor3 reconstruction;
  FitState state;
  std::size_t best_restart = 0;
  std::vector<double> restart_losses;   // final loss per restart, +inf when it failed
  std::vector<std::vector<TracePoint>> traces;
  double wall_seconds = 0.0;
  FitConfig config;
};

/// Runs cfg.restarts independent trajectories and keeps the one with the
/// lowest final data loss. `truth`, when given, only feeds the PSNR column
/// of the traces.
FitResult fit(const MeasurementSet& m, const CodedApertureSet& a, Dims dims, const FitConfig& cfg,
              const Tensor3* truth = nullptr);

/// Trace as CSV with header iteration,loss,psnr (one block per restart when
/// `all_restarts` is set, prefixed by a restart column).
std::string trace_csv(const FitResult& r, bool all_restarts = false);

}  // namespace csi

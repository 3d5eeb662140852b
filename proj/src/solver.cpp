#include "csi/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <sstream>

#include "csi/error.hpp"
#include "csi/metrics.hpp"
#include "csi/random.hpp"

namespace csi {

namespace {

// Learnable arrays in a fixed order: generator arrays, then core, U, V, W.
std::vector<std::span<double>> learnable(FitState& s, FitMode mode) {
  auto out = s.generator.arrays();
  if (mode == FitMode::full) {
    out.emplace_back(s.latent.core.data());
    out.emplace_back(s.latent.U.data());
    out.emplace_back(s.latent.V.data());
    out.emplace_back(s.latent.W.data());
  }
  return out;
}

std::vector<std::span<const double>> gradient_arrays(const FitGradients& g, FitMode mode) {
  auto out = g.generator.arrays();
  if (mode == FitMode::full) {
    if (!g.latent) throw UsageError("full-mode step needs latent gradients");
    out.emplace_back(g.latent->core.data());
    out.emplace_back(g.latent->U.data());
    out.emplace_back(g.latent->V.data());
    out.emplace_back(g.latent->W.data());
  }
  return out;
}

struct Trajectory {
  FitState state;
  double final_loss = std::numeric_limits<double>::infinity();
  std::vector<TracePoint> trace;
  bool ok = false;
};

Trajectory run_trajectory(const MeasurementSet& m, const CodedApertureSet& a, Dims dims,
                          const FitConfig& cfg, std::size_t restart, const Tensor3* truth) {
  Trajectory t;
  t.state = init_state(dims, cfg, restart);
  Optimizer opt(cfg, t.state);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t stride = cfg.log_stride == 0 ? 1 : cfg.log_stride;
  try {
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
      LossEval e = loss_and_grad(t.state, m.y(), a, cfg.mode);
      if (!std::isfinite(e.loss)) throw NumericalError("non-finite loss at iteration " + std::to_string(it));
      if (it % stride == 0)
        t.trace.push_back({it, e.loss, truth ? psnr(*truth, e.reconstruction) : nan});
      opt.step(t.state, e.gradients, it);
    }
    const Tensor3 x = reconstruct(t.state);
    const auto hx = apply_sensing(x, a);
    double se = 0.0;
    for (std::size_t i = 0; i < hx.size(); ++i) se += (hx[i] - m.y()[i]) * (hx[i] - m.y()[i]);
    t.final_loss = 0.5 * se;
    if (!std::isfinite(t.final_loss)) throw NumericalError("non-finite final loss");
    t.trace.push_back({cfg.iterations, t.final_loss, truth ? psnr(*truth, x) : nan});
    t.ok = true;
  } catch (const NumericalError& err) {
    std::fprintf(stderr, "restart %zu aborted: %s\n", restart, err.what());
    t.final_loss = std::numeric_limits<double>::infinity();
  }
  return t;
}

}  // namespace

const char* to_string(FitMode mode) { return mode == FitMode::full ? "full" : "dip"; }

FitMode parse_fit_mode(const std::string& name) {
  if (name == "full") return FitMode::full;
  if (name == "dip" || name == "dip-fixed-input") return FitMode::dip_fixed;
  throw ArgumentError("unknown mode '" + name + "' (expected full or dip)");
}

void FitConfig::validate() const {
  if (iterations < 1) throw ArgumentError("iterations must be at least 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (restarts < 1) throw ArgumentError("restarts must be at least 1");
  if (!(rho > 0.0 && rho <= 1.0)) throw ArgumentError("rank factor must lie in (0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ArgumentError("moment decay rates must lie in [0, 1)");
}

std::size_t FitConfig::effective_width() const {
  if (width != 0) return width;
  return arch == Architecture::autoencoder ? 16 : 7;
}

FitState init_state(Dims dims, const FitConfig& cfg, std::size_t restart) {
  const std::uint64_t base = mix_seed(cfg.seed, restart);
  return {build_generator(cfg.arch, dims.L, cfg.effective_width(), mix_seed(base, 1)),
          init_latent(dims, cfg.rho, mix_seed(base, 0))};
}

Tensor3 reconstruct(const FitState& state) {
  return generator_forward(state.generator, expand(state.latent)).first;
}

double data_loss(const FitState& state, std::span<const double> y, const CodedApertureSet& a) {
  const auto hx = apply_sensing(reconstruct(state), a);
  if (hx.size() != y.size()) throw ShapeError("measurement length does not match the aperture set");
  double se = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) se += (hx[i] - y[i]) * (hx[i] - y[i]);
  return 0.5 * se;
}

LossEval loss_and_grad(const FitState& state, std::span<const double> y, const CodedApertureSet& a,
                       FitMode mode) {
  const Tensor3 z = expand(state.latent);
  auto [x, tape] = generator_forward(state.generator, z);
  std::vector<double> r = apply_sensing(x, a);
  if (r.size() != y.size()) throw ShapeError("measurement length does not match the aperture set");
  double se = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] -= y[i];
    se += r[i] * r[i];
  }
  const Tensor3 gx = apply_sensing_adjoint(r, a);
  auto [ggen, gz] = generator_backward(tape, gx);

  LossEval e;
  e.loss = 0.5 * se;
  e.reconstruction = std::move(x);
  e.gradients.generator = std::move(ggen);
  if (mode == FitMode::full) e.gradients.latent = backprop_latent(state.latent, gz);
  return e;
}

Optimizer::Optimizer(const FitConfig& cfg, const FitState& state) : cfg_(cfg) {
  FitState probe = state;
  for (auto s : learnable(probe, cfg.mode)) {
    m_.emplace_back(s.size(), 0.0);
    v_.emplace_back(s.size(), 0.0);
  }
}

void Optimizer::step(FitState& state, const FitGradients& grads, std::size_t iteration) {
  auto params = learnable(state, cfg_.mode);
  const auto g = gradient_arrays(grads, cfg_.mode);
  if (params.size() != g.size() || params.size() != m_.size())
    throw ShapeError("gradient layout does not match the optimiser state");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k].size() != params[k].size()) throw ShapeError("gradient array has the wrong length");
    for (double v : g[k])
      if (!std::isfinite(v))
        throw NumericalError("non-finite gradient at iteration " + std::to_string(iteration));
  }

  const double lr = cfg_.learning_rate;
  if (cfg_.optimizer == OptimizerKind::sgd) {
    for (std::size_t k = 0; k < g.size(); ++k) axpy(-lr, g[k], params[k]);
    return;
  }
  const double t = static_cast<double>(iteration + 1);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto& m = m_[k];
    auto& v = v_[k];
    auto p = params[k];
    const auto gk = g[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gk[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gk[i] * gk[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

FitResult fit(const MeasurementSet& m, const CodedApertureSet& a, Dims dims, const FitConfig& cfg,
              const Tensor3* truth) {
  cfg.validate();
  if (!(a.scene_dims() == dims)) throw ShapeError("aperture set does not match the scene extents");
  if (m.shots() != a.shots() || m.rows() != dims.M || m.cols() != dims.N + dims.L - 1)
    throw ShapeError("measurements are inconsistent with the aperture set and scene extents");
  if (truth && !(truth->dims() == dims)) throw ShapeError("ground truth has the wrong extents");

  const auto t0 = std::chrono::steady_clock::now();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(cfg.restarts);
  std::vector<Trajectory> runs(cfg.restarts);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    try {
      runs[r] = run_trajectory(m, a, dims, cfg, r, truth);
    } catch (...) {
#pragma omp critical(csi_restart_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  FitResult res;
  res.config = cfg;
  std::size_t best = 0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    res.restart_losses.push_back(runs[r].final_loss);
    res.traces.push_back(runs[r].trace);
    if (runs[r].final_loss < runs[best].final_loss) best = r;
  }
  if (!runs[best].ok) throw NumericalError("every restart diverged");
  res.best_restart = best;
  res.state = std::move(runs[best].state);
  res.reconstruction = reconstruct(res.state);
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string trace_csv(const FitResult& r, bool all_restarts) {
  std::ostringstream os;
  os.precision(17);
  if (all_restarts) {
    os << "restart,iteration,loss,psnr\n";
    for (std::size_t k = 0; k < r.traces.size(); ++k)
      for (const auto& p : r.traces[k]) os << k << ',' << p.iteration << ',' << p.loss << ',' << p.psnr << '\n';
  } else {
    os << "iteration,loss,psnr\n";
    for (const auto& p : r.traces[r.best_restart]) os << p.iteration << ',' << p.loss << ',' << p.psnr << '\n';
  }
  return os.str();
}

}  // namespace csi

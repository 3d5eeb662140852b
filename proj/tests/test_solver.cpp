#include <doctest.h>

#include <cmath>
#include <limits>

#include "csi/error.hpp"
#include "csi/experiments.hpp"
#include "csi/io.hpp"
#include "csi/solver.hpp"
#include "oracles.hpp"

using namespace csi;

namespace {

FitConfig small_config() {
  FitConfig cfg;
  cfg.width = 3;
  cfg.restarts = 1;
  cfg.iterations = 20;
  cfg.log_stride = 1;
  return cfg;
}

bool same_state(const FitState& a, const FitState& b) {
  const auto ga = a.generator.arrays(), gb = b.generator.arrays();
  for (std::size_t k = 0; k < ga.size(); ++k)
    if (!std::equal(ga[k].begin(), ga[k].end(), gb[k].begin(), gb[k].end())) return false;
  return a.latent.core == b.latent.core && a.latent.U == b.latent.U && a.latent.V == b.latent.V &&
         a.latent.W == b.latent.W;
}

FitGradients constant_gradients(const FitState& s, double value) {
  FitGradients g;
  g.generator.conv = s.generator.conv;
  for (auto a : g.generator.arrays()) std::fill(a.begin(), a.end(), value);
  LatentGradients lg{s.latent.core, s.latent.U, s.latent.V, s.latent.W};
  for (auto a : {lg.core.data(), lg.U.data(), lg.V.data(), lg.W.data()}) std::fill(a.begin(), a.end(), value);
  g.latent = lg;
  return g;
}

}  // namespace

TEST_CASE("loss vanishes when the reconstruction explains the data") {
  const Dims d{8, 8, 4};
  const FitConfig cfg = small_config();
  const FitState s = init_state(d, cfg, 0);
  const auto a = generate_aperture(ApertureKind::binary, d, 2, 0.5, 1);
  const auto y = apply_sensing(reconstruct(s), a);
  const LossEval e = loss_and_grad(s, y, a);
  CHECK(e.loss == 0.0);
  for (auto g : std::as_const(e.gradients.generator).arrays()) CHECK(max_abs(g) == 0.0);
  CHECK(max_abs(e.gradients.latent->core.data()) == 0.0);
  CHECK(data_loss(s, y, a) == 0.0);
}

TEST_CASE("loss is quadratic in the residual") {
  const Dims d{8, 8, 4};
  const FitState s = init_state(d, small_config(), 0);
  const auto a = generate_aperture(ApertureKind::binary, d, 1, 0.5, 2);
  const auto hx = apply_sensing(reconstruct(s), a);
  std::vector<double> y1 = hx, y2 = hx;
  Rng rng(3);
  for (std::size_t i = 0; i < hx.size(); ++i) {
    const double r = rng.normal();
    y1[i] -= r;
    y2[i] -= 2.0 * r;
  }
  CHECK(data_loss(s, y2, a) == doctest::Approx(4.0 * data_loss(s, y1, a)).epsilon(1e-12));
}

TEST_CASE("composed gradient matches central differences on sampled parameters") {
  const Dims d{8, 8, 4};
  FitConfig cfg = small_config();
  cfg.width = 4;
  FitState s = init_state(d, cfg, 0);
  const auto a = generate_aperture(ApertureKind::binary, d, 1, 0.5, 4);
  const Tensor3 scene = oracle::random_tensor(d, 5, 0.0, 1.0);
  const auto y = apply_sensing(scene, a);

  const LossEval e = loss_and_grad(s, y, a);
  std::vector<std::span<double>> params = s.generator.arrays();
  std::vector<std::span<const double>> grads = std::as_const(e.gradients.generator).arrays();
  params.insert(params.end(), {s.latent.core.data(), s.latent.U.data(), s.latent.V.data(), s.latent.W.data()});
  const LatentGradients& lg = *e.gradients.latent;
  grads.insert(grads.end(), {lg.core.data(), lg.U.data(), lg.V.data(), lg.W.data()});

  Rng rng(6);
  std::vector<double> analytic, numeric;
  for (int k = 0; k < 20; ++k) {
    const std::size_t arr = rng.next() % params.size();
    const std::size_t i = rng.next() % params[arr].size();
    double& p = params[arr][i];
    const double keep = p, h = 1e-5;
    p = keep + h;
    const double fp = data_loss(s, y, a);
    p = keep - h;
    const double fm = data_loss(s, y, a);
    p = keep;
    analytic.push_back(grads[arr][i]);
    numeric.push_back((fp - fm) / (2.0 * h));
  }
  CHECK(oracle::relative_error(analytic, numeric) <= 1e-4);
}

TEST_CASE("first adaptive-moment step moves by the learning rate") {
  const Dims d{6, 6, 2};
  FitConfig cfg = small_config();
  cfg.learning_rate = 1e-3;
  for (double gval : {0.7, -3.0}) {
    FitState s = init_state(d, cfg, 0);
    const FitState before = s;
    Optimizer opt(cfg, s);
    opt.step(s, constant_gradients(s, gval), 0);
    const auto pa = before.generator.arrays();
    const auto pb = std::as_const(s.generator).arrays();
    for (std::size_t k = 0; k < pa.size(); ++k)
      for (std::size_t i = 0; i < pa[k].size(); ++i) {
        const double delta = pb[k][i] - pa[k][i];
        CHECK(std::abs(delta) >= 0.99 * cfg.learning_rate);
        CHECK(std::abs(delta) <= 1.0 * cfg.learning_rate);
        CHECK(delta * gval < 0.0);
      }
    const double dc = s.latent.core.data()[0] - before.latent.core.data()[0];
    CHECK(std::abs(dc) >= 0.99 * cfg.learning_rate);
  }
}

TEST_CASE("zero gradient leaves the state unchanged") {
  const FitConfig cfg = small_config();
  for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    FitConfig c = cfg;
    c.optimizer = kind;
    FitState s = init_state({6, 6, 2}, c, 0);
    const FitState before = s;
    Optimizer opt(c, s);
    opt.step(s, constant_gradients(s, 0.0), 0);
    opt.step(s, constant_gradients(s, 0.0), 1);
    CHECK(same_state(s, before));
  }
}

TEST_CASE("non-finite gradients abort without touching the state") {
  const FitConfig cfg = small_config();
  FitState s = init_state({6, 6, 2}, cfg, 0);
  const FitState before = s;
  Optimizer opt(cfg, s);
  FitGradients g = constant_gradients(s, 0.5);
  g.latent->U.data()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(opt.step(s, g, 0), NumericalError);
  CHECK(same_state(s, before));
}

TEST_CASE("fits are deterministic and re-evaluable") {
  const Dims d{8, 8, 4};
  FitConfig cfg = small_config();
  cfg.restarts = 2;
  const auto a = generate_aperture(ApertureKind::binary, d, 1, 0.5, 7);
  const MeasurementSet m = forward(oracle::random_tensor(d, 8, 0.0, 1.0), a);
  const FitResult r1 = fit(m, a, d, cfg), r2 = fit(m, a, d, cfg);
  CHECK(r1.reconstruction == r2.reconstruction);
  CHECK(r1.restart_losses == r2.restart_losses);
  CHECK(r1.best_restart == r2.best_restart);
  CHECK(same_state(r1.state, r2.state));
  CHECK(reconstruct(r1.state) == r1.reconstruction);
  CHECK(r1.traces.size() == 2);
  CHECK(r1.traces[0].back().iteration == cfg.iterations);
  CHECK(r1.restart_losses[r1.best_restart] <= r1.restart_losses[1 - r1.best_restart]);

  FitConfig other = cfg;
  other.seed = 1;
  CHECK_FALSE(fit(m, a, d, other).reconstruction == r1.reconstruction);
}

TEST_CASE("dip mode never changes the latent") {
  const Dims d{8, 8, 4};
  FitConfig cfg = small_config();
  cfg.mode = FitMode::dip_fixed;
  const auto a = generate_aperture(ApertureKind::binary, d, 1, 0.5, 9);
  const MeasurementSet m = forward(oracle::random_tensor(d, 10, 0.0, 1.0), a);
  const FitState init = init_state(d, cfg, 0);
  const FitResult r = fit(m, a, d, cfg);
  CHECK(r.state.latent.core == init.latent.core);
  CHECK(r.state.latent.U == init.latent.U);
  CHECK(r.state.latent.V == init.latent.V);
  CHECK(r.state.latent.W == init.latent.W);
  CHECK_FALSE(r.state.generator.conv[0].weight == init.generator.conv[0].weight);
  CHECK_FALSE(loss_and_grad(init, m.y(), a, FitMode::dip_fixed).gradients.latent.has_value());
}

TEST_CASE("self-consistent scene is fitted to a small residual") {
  const Dims d{16, 16, 4};
  FitConfig cfg = small_config();
  cfg.width = 4;
  cfg.iterations = 3000;
  cfg.learning_rate = 1e-2;
  cfg.log_stride = 100;
  // scene = sigmoid of a random network's output, so it lies in the model class
  const FitState gen = init_state(d, cfg, 99);
  const Tensor3 scene = reconstruct(gen);
  const auto a = generate_aperture(ApertureKind::binary, d, 2, 0.5, 11);
  const MeasurementSet m = forward(scene, a);
  const double ynorm2 = dot(m.y(), m.y());
  const FitResult r = fit(m, a, d, cfg);
  CHECK(r.restart_losses[0] <= 1e-3 * ynorm2);
}

TEST_CASE("smoothed residual trace does not increase on the desk phantom") {
  const Dims d{32, 32, 8};
  const Tensor3 scene = io::make_phantom(d, 6, 0);
  std::vector<double> violations;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    AcquisitionConfig ac;
    ac.seed = seed;
    const Acquisition acq = simulate(scene, ac);
    FitConfig cfg;
    cfg.iterations = 500;
    cfg.restarts = 1;
    cfg.seed = seed;
    cfg.log_stride = 1;
    const FitResult r = fit(acq.measurements, acq.aperture, d, cfg);
    const auto& trace = r.traces[0];
    std::vector<double> windows;
    for (std::size_t w = 0; w + 50 <= cfg.iterations; w += 50) {
      double sum = 0.0;
      for (std::size_t i = w; i < w + 50; ++i) sum += trace[i].loss;
      windows.push_back(sum / 50.0);
    }
    double count = 0;
    for (std::size_t w = 1; w < windows.size(); ++w) count += windows[w] > windows[w - 1];
    violations.push_back(count);
  }
  CHECK(median(violations) <= 1.0);
}

TEST_CASE("inconsistent inputs are rejected before iterating") {
  const Dims d{8, 8, 4};
  const auto a = generate_aperture(ApertureKind::binary, d, 1, 0.5, 12);
  const MeasurementSet m = forward(Tensor3(d, 0.5), a);
  CHECK_THROWS_AS((void)fit(m, a, {8, 8, 5}, small_config()), ShapeError);
  const auto a2 = generate_aperture(ApertureKind::binary, d, 2, 0.5, 12);
  CHECK_THROWS_AS((void)fit(m, a2, d, small_config()), ShapeError);
  FitConfig bad = small_config();
  bad.rho = 0.0;
  CHECK_THROWS_AS((void)fit(m, a, d, bad), ArgumentError);
}

TEST_CASE("mode names") {
  CHECK(parse_fit_mode("full") == FitMode::full);
  CHECK(parse_fit_mode("dip") == FitMode::dip_fixed);
  CHECK(parse_fit_mode("dip-fixed-input") == FitMode::dip_fixed);
  CHECK_THROWS_AS((void)parse_fit_mode("fixed"), ArgumentError);
}

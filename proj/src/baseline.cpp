#include "csi/baseline.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "csi/error.hpp"
#include "csi/random.hpp"

namespace csi {

namespace {

struct DctBasis {
  Matrix m, n, l;
  Matrix mt, nt, lt;

  explicit DctBasis(Dims d)
      : m(dct_matrix(d.M)), n(dct_matrix(d.N)), l(dct_matrix(d.L)),
        mt(m.transposed()), nt(n.transposed()), lt(l.transposed()) {}

  Tensor3 analysis(const Tensor3& x) const {
    return mode_product(mode_product(mode_product(x, m, 1), n, 2), l, 3);
  }
  Tensor3 synthesis(const Tensor3& c) const {
    return mode_product(mode_product(mode_product(c, mt, 1), nt, 2), lt, 3);
  }
};

double objective(const Tensor3& coeffs, const DctBasis& basis, std::span<const double> y,
                 const CodedApertureSet& a, double lambda) {
  const auto hx = apply_sensing(basis.synthesis(coeffs), a);
  double se = 0.0;
  for (std::size_t i = 0; i < hx.size(); ++i) se += (hx[i] - y[i]) * (hx[i] - y[i]);
  double l1 = 0.0;
  for (double v : coeffs.data()) l1 += std::abs(v);
  return 0.5 * se + lambda * l1;
}

void check_consistent(const MeasurementSet& m, const CodedApertureSet& a, Dims dims) {
  if (!(a.scene_dims() == dims) || m.shots() != a.shots() || m.rows() != dims.M ||
      m.cols() != dims.N + dims.L - 1)
    throw ShapeError("measurements are inconsistent with the aperture set and scene extents");
}

}  // namespace

Tensor3 sensing_weights(const CodedApertureSet& a, Dims dims) {
  const std::vector<double> ones(a.rows(), 1.0);
  if (!(a.scene_dims() == dims)) throw ShapeError("aperture set does not match the scene extents");
  return apply_sensing_adjoint(ones, a);
}

Tensor3 back_projection(const MeasurementSet& m, const CodedApertureSet& a, Dims dims) {
  Tensor3 x = adjoint(m, a, dims);
  const Tensor3 w = sensing_weights(a, dims);
  auto xv = x.data();
  const auto wv = w.data();
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] = wv[i] == 0.0 ? 0.0 : xv[i] / wv[i];
  return x;
}

Matrix dct_matrix(std::size_t n) {
  Matrix d(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i)
      d(k, i) = s * std::cos(std::numbers::pi * (static_cast<double>(i) + 0.5) * static_cast<double>(k) / nn);
  }
  return d;
}

double estimate_lipschitz(const CodedApertureSet& a, Dims dims, std::size_t iterations) {
  Rng rng(0x5eed);
  Tensor3 v(dims);
  for (double& x : v.data()) x = rng.normal();
  double lambda = 0.0;
  for (std::size_t k = 0; k < iterations; ++k) {
    const double nv = norm2(v.data());
    if (nv == 0.0) return 0.0;
    scale(v.data(), 1.0 / nv);
    Tensor3 w = apply_sensing_adjoint(apply_sensing(v, a), a);
    lambda = dot(v.data(), w.data());
    v = std::move(w);
  }
  return lambda;
}

double default_lambda(const MeasurementSet& m, const CodedApertureSet& a, Dims dims) {
  check_consistent(m, a, dims);
  const DctBasis basis(dims);
  return 0.01 * max_abs(basis.analysis(adjoint(m, a, dims)).data());
}

FistaResult fista_dct(const MeasurementSet& m, const CodedApertureSet& a, Dims dims,
                      const FistaOptions& opts) {
  check_consistent(m, a, dims);
  if (opts.iterations < 1) throw ArgumentError("FISTA needs at least one iteration");
  const DctBasis basis(dims);
  const auto y = m.y();

  FistaResult res;
  res.lambda = opts.lambda ? *opts.lambda : 0.01 * max_abs(basis.analysis(adjoint(m, a, dims)).data());
  if (!(res.lambda > 0.0)) throw ArgumentError("lambda must be positive");
  res.lipschitz = estimate_lipschitz(a, dims, opts.power_iterations);
  if (!(res.lipschitz > 0.0)) throw NumericalError("sensing operator has no energy");
  const double step = 1.0 / res.lipschitz;
  const double thresh = res.lambda * step;

  Tensor3 x(dims), x_prev(dims), yk(dims);
  double fx = objective(x, basis, y, a, res.lambda);
  res.objective.push_back(fx);
  double t = 1.0;
  for (std::size_t k = 0; k < opts.iterations; ++k) {
    auto r = apply_sensing(basis.synthesis(yk), a);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    const Tensor3 grad = basis.analysis(apply_sensing_adjoint(r, a));

    Tensor3 z(dims);
    auto zv = z.data();
    const auto yv = std::as_const(yk).data();
    const auto gv = grad.data();
    for (std::size_t i = 0; i < zv.size(); ++i) zv[i] = soft_threshold(yv[i] - step * gv[i], thresh);
    const double fz = objective(z, basis, y, a, res.lambda);
    if (!std::isfinite(fz)) throw NumericalError("FISTA iterate became non-finite at iteration " + std::to_string(k));

    x_prev = x;
    if (fz <= fx) {
      x = z;
      fx = fz;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    auto ykv = yk.data();
    const auto xv = x.data(), xpv = x_prev.data();
    for (std::size_t i = 0; i < ykv.size(); ++i)
      ykv[i] = xv[i] + (t / t_next) * (zv[i] - xv[i]) + ((t - 1.0) / t_next) * (xv[i] - xpv[i]);
    t = t_next;
    res.objective.push_back(fx);
  }
  res.reconstruction = basis.synthesis(x);
  return res;
}

}  // namespace csi

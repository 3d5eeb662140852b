#include "csi/cassi.hpp"

#include <cmath>
#include <string>

#include "csi/error.hpp"
#include "csi/kernels.hpp"
#include "csi/random.hpp"

namespace csi {

namespace {

kernels::ShotShape shot_shape(const CodedApertureSet& a) {
  const Dims& d = a.scene_dims();
  return {d.M, d.N, d.L, a.code_planes()};
}

void require_scene(const CodedApertureSet& a, const Dims& dims) {
  if (!(a.scene_dims() == dims))
    throw ShapeError("aperture set was built for a " + std::to_string(a.scene_dims().M) + "x" +
                     std::to_string(a.scene_dims().N) + "x" + std::to_string(a.scene_dims().L) +
                     " scene, got " + std::to_string(dims.M) + "x" + std::to_string(dims.N) + "x" +
                     std::to_string(dims.L));
}

}  // namespace

const char* to_string(ApertureKind kind) {
  return kind == ApertureKind::binary ? "bernoulli" : "colored";
}

CodedApertureSet::CodedApertureSet(ApertureKind kind, Dims scene, std::vector<Tensor3> codes)
    : kind_(kind), scene_(scene), codes_(std::move(codes)) {
  if (codes_.empty()) throw ArgumentError("aperture set needs at least one shot");
  const Dims want{scene_.M, scene_.N, code_planes()};
  for (const Tensor3& c : codes_) {
    if (!(c.dims() == want))
      throw ShapeError("coded aperture shot does not match the " + std::string(to_string(kind)) +
                       " code shape");
    for (double v : c.data()) {
      const bool ok = kind_ == ApertureKind::binary ? (v == 0.0 || v == 1.0) : (v >= 0.0 && v <= 1.0);
      if (!ok)
        throw ArgumentError("coded aperture entry " + std::to_string(v) + " outside the " +
                            std::string(to_string(kind)) + " range");
    }
  }
}

MeasurementSet::MeasurementSet(std::size_t shots, std::size_t rows, std::size_t cols,
                               std::vector<double> y, Provenance provenance)
    : shots_(shots), rows_(rows), cols_(cols), y_(std::move(y)), provenance_(provenance) {
  if (shots_ == 0 || rows_ == 0 || cols_ == 0) throw ShapeError("measurement extents must be positive");
  if (y_.size() != shots_ * rows_ * cols_)
    throw ShapeError("measurement length " + std::to_string(y_.size()) + " != S*M*cols = " +
                     std::to_string(shots_ * rows_ * cols_));
}

std::span<const double> MeasurementSet::shot_view(std::size_t s) const {
  if (s >= shots_) throw ArgumentError("shot index out of range");
  return std::span<const double>(y_).subspan(s * shot_size(), shot_size());
}

Matrix MeasurementSet::shot(std::size_t s) const {
  const auto v = shot_view(s);
  return Matrix(rows_, cols_, std::vector<double>(v.begin(), v.end()));
}

CodedApertureSet generate_aperture(ApertureKind kind, Dims scene, std::size_t shots,
                                   double transmittance, std::uint64_t seed) {
  if (!(transmittance > 0.0 && transmittance < 1.0))
    throw ArgumentError("transmittance must lie in (0, 1), got " + std::to_string(transmittance));
  if (shots == 0) throw ArgumentError("shot count must be at least 1");
  Rng rng(seed);
  const std::size_t planes = kind == ApertureKind::binary ? 1 : scene.L;
  std::vector<Tensor3> codes;
  codes.reserve(shots);
  for (std::size_t s = 0; s < shots; ++s) {
    Tensor3 c(Dims{scene.M, scene.N, planes});
    for (double& v : c.data()) v = rng.bernoulli(transmittance) ? 1.0 : 0.0;
    codes.push_back(std::move(c));
  }
  return CodedApertureSet(kind, scene, std::move(codes));
}

Matrix forward_shot(const Tensor3& x, const Tensor3& code) {
  const Dims& d = x.dims();
  const Dims& c = code.dims();
  if (c.M != d.M || c.N != d.N || (c.L != 1 && c.L != d.L))
    throw ShapeError("code of shape " + std::to_string(c.M) + "x" + std::to_string(c.N) + "x" +
                     std::to_string(c.L) + " does not fit scene " + std::to_string(d.M) + "x" +
                     std::to_string(d.N) + "x" + std::to_string(d.L));
  const kernels::ShotShape s{d.M, d.N, d.L, c.L};
  Matrix y(d.M, s.det_cols());
  kernels::parallel::cassi_forward(s, x.data(), code.data(), y.data());
  return y;
}

std::vector<double> apply_sensing(const Tensor3& x, const CodedApertureSet& a) {
  require_scene(a, x.dims());
  const auto s = shot_shape(a);
  const std::size_t per = s.rows * s.det_cols();
  std::vector<double> y(a.shots() * per);
  for (std::size_t k = 0; k < a.shots(); ++k)
    kernels::parallel::cassi_forward(s, x.data(), a.code(k).data(),
                                     std::span<double>(y).subspan(k * per, per));
  return y;
}

Tensor3 apply_sensing_adjoint(std::span<const double> y, const CodedApertureSet& a) {
  const auto s = shot_shape(a);
  const std::size_t per = s.rows * s.det_cols();
  if (y.size() != a.shots() * per)
    throw ShapeError("measurement length " + std::to_string(y.size()) + " != " +
                     std::to_string(a.shots() * per));
  Tensor3 x(a.scene_dims());
  for (std::size_t k = 0; k < a.shots(); ++k)
    kernels::parallel::cassi_adjoint_accumulate(s, y.subspan(k * per, per), a.code(k).data(),
                                                x.data());
  return x;
}

MeasurementSet forward(const Tensor3& x, const CodedApertureSet& a) {
  const Dims& d = x.dims();
  Provenance p;
  p.kind = a.kind();
  return MeasurementSet(a.shots(), d.M, d.N + d.L - 1, apply_sensing(x, a), p);
}

Tensor3 adjoint(const MeasurementSet& m, const CodedApertureSet& a, Dims dims) {
  require_scene(a, dims);
  if (m.shots() != a.shots() || m.rows() != dims.M || m.cols() != dims.N + dims.L - 1)
    throw ShapeError("measurement set (" + std::to_string(m.shots()) + " shots of " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ") is inconsistent with the aperture set");
  return apply_sensing_adjoint(m.y(), a);
}

Matrix build_dense_oracle(const CodedApertureSet& a, Dims dims, std::size_t max_columns) {
  require_scene(a, dims);
  if (dims.size() > max_columns)
    throw ArgumentError("dense sensing matrix would have " + std::to_string(dims.size()) +
                        " columns (cap " + std::to_string(max_columns) +
                        "); use the operator form forward()/adjoint() instead");
  const std::size_t dc = dims.N + dims.L - 1;
  Matrix h(a.rows(), dims.size());
  for (std::size_t s = 0; s < a.shots(); ++s) {
    const Tensor3& c = a.code(s);
    for (std::size_t l = 0; l < dims.L; ++l)
      for (std::size_t m = 0; m < dims.M; ++m)
        for (std::size_t n = 0; n < dims.N; ++n) {
          const std::size_t row = (s * dims.M + m) * dc + n + l;
          const std::size_t col = Tensor3::index(dims, m, n, l);
          h(row, col) = c(m, n, a.code_planes() == 1 ? 0 : l);
        }
  }
  return h;
}

MeasurementSet add_noise(const MeasurementSet& m, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return m;
  if (!std::isfinite(snr_db)) throw ArgumentError("SNR must be finite or +inf");
  const double energy = dot(m.y(), m.y());
  if (energy == 0.0) throw ArgumentError("cannot set a finite SNR on zero-energy measurements");
  const double sigma =
      std::sqrt(energy / (static_cast<double>(m.y().size()) * std::pow(10.0, snr_db / 10.0)));
  MeasurementSet out = m;
  Rng rng(seed);
  for (double& v : out.y()) v += sigma * rng.normal();
  out.provenance().snr_db = snr_db;
  out.provenance().seed = seed;
  return out;
}

bool is_compressive(Dims dims, std::size_t shots) {
  return shots * dims.M * (dims.N + dims.L - 1) < dims.size();
}

}  // namespace csi

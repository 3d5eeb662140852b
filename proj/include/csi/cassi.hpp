#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "csi/tensor.hpp"

namespace csi {

enum class ApertureKind : std::uint8_t {
  binary = 0,   // one {0,1} spatial mask per shot, shared by all bands
  colored = 1,  // per-pixel spectral filter: one mask plane per band
};

const char* to_string(ApertureKind kind);

/// The S coded apertures of a multi-shot acquisition of an M x N x L scene.
/// Binary codes are stored as M x N x 1 tensors, colored codes as M x N x L.
class CodedApertureSet {
 public:
  CodedApertureSet(ApertureKind kind, Dims scene, std::vector<Tensor3> codes);

  ApertureKind kind() const { return kind_; }
  const Dims& scene_dims() const { return scene_; }
  std::size_t shots() const { return codes_.size(); }
  std::size_t code_planes() const { return kind_ == ApertureKind::binary ? 1 : scene_.L; }
  const Tensor3& code(std::size_t s) const { return codes_.at(s); }
  const std::vector<Tensor3>& codes() const { return codes_; }

  std::size_t rows() const { return shots() * scene_.M * (scene_.N + scene_.L - 1); }

 private:
  ApertureKind kind_;
  Dims scene_;
  std::vector<Tensor3> codes_;
};

struct Provenance {
  std::uint64_t seed = 0;
  double snr_db = std::numeric_limits<double>::infinity();
  ApertureKind kind = ApertureKind::binary;
};

/// Stacked detector images y = [vect(Y1); ...; vect(YS)], each Y row-major
/// M x (N+L-1).
class MeasurementSet {
 public:
  MeasurementSet(std::size_t shots, std::size_t rows, std::size_t cols, std::vector<double> y,
                 Provenance provenance = {});

  std::size_t shots() const { return shots_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t shot_size() const { return rows_ * cols_; }

  std::span<const double> y() const { return y_; }
  std::span<double> y() { return y_; }
  std::span<const double> shot_view(std::size_t s) const;
  Matrix shot(std::size_t s) const;

  const Provenance& provenance() const { return provenance_; }
  Provenance& provenance() { return provenance_; }

 private:
  std::size_t shots_, rows_, cols_;
  std::vector<double> y_;
  Provenance provenance_;
};

/// Random apertures: binary entries are i.i.d. Bernoulli(transmittance);
/// colored entries are i.i.d. Bernoulli(transmittance) per (pixel, band).
CodedApertureSet generate_aperture(ApertureKind kind, Dims scene, std::size_t shots,
                                   double transmittance, std::uint64_t seed);

/// One shot: Y = sum_l shift_l(X_l .* C_l).
Matrix forward_shot(const Tensor3& x, const Tensor3& code);

MeasurementSet forward(const Tensor3& x, const CodedApertureSet& a);
Tensor3 adjoint(const MeasurementSet& m, const CodedApertureSet& a, Dims dims);
// Operator forms over raw stacked vectors, used inside the solvers.
std::vector<double> apply_sensing(const Tensor3& x, const CodedApertureSet& a);
Tensor3 apply_sensing_adjoint(std::span<const double> y, const CodedApertureSet& a);

/// Explicit S*M*(N+L-1) x M*N*L sensing matrix. Test oracle only; refuses
/// problems with more than `max_columns` voxels.
Matrix build_dense_oracle(const CodedApertureSet& a, Dims dims, std::size_t max_columns = 4096);

/// Adds i.i.d. Gaussian noise with variance ||y||^2 / (len(y) * 10^(snr/10)) to
/// the stacked vector. An infinite SNR returns the input unchanged.
MeasurementSet add_noise(const MeasurementSet& m, double snr_db, std::uint64_t seed);

/// True when S*M*(N+L-1) < M*N*L, i.e. the acquisition actually compresses.
bool is_compressive(Dims dims, std::size_t shots);

}  // namespace csi

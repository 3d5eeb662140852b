#pragma once

// Binary file formats (all little-endian, 32-bit float payloads):
//
//   SCB1 spectral cube   "SCB1" u32 M, u32 N, u32 L | M*N*L f32, band-major
//   SME1 measurements    "SME1" u32 S, u32 M, u32 cols, f32 snr_db, u64 seed,
//                        u8 aperture kind | S*M*cols f32, shot-major
//   SCA1 aperture set    "SCA1" u8 kind, u32 S, u32 M, u32 N, u32 L |
//                        S*M*N*P f32 with P = 1 (binary) or L (colored)

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "csi/cassi.hpp"
#include "csi/tensor.hpp"

namespace csi::io {

inline constexpr std::size_t kScubeHeaderBytes = 16;
inline constexpr std::size_t kSmeaHeaderBytes = 29;
inline constexpr std::size_t kScaHeaderBytes = 21;

std::string encode_scube(const Tensor3& cube);
Tensor3 decode_scube(std::string_view bytes);
std::string encode_smea(const MeasurementSet& m);
MeasurementSet decode_smea(std::string_view bytes);
std::string encode_aperture(const CodedApertureSet& a);
CodedApertureSet decode_aperture(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

Tensor3 read_scube(const std::filesystem::path& path);
void write_scube(const std::filesystem::path& path, const Tensor3& cube);
MeasurementSet read_smea(const std::filesystem::path& path);
void write_smea(const std::filesystem::path& path, const MeasurementSet& m);
CodedApertureSet read_aperture(const std::filesystem::path& path);
void write_aperture(const std::filesystem::path& path, const CodedApertureSet& a);

/// Divides by the global maximum when it is positive; returns the factor used
/// (1 when nothing was done).
double normalize_cube(Tensor3& cube);
void write_scale_sidecar(const std::filesystem::path& cube_path, double scale);
std::filesystem::path scale_sidecar_path(const std::filesystem::path& cube_path);

/// Binary 16-bit PGM (P5, big-endian samples as the format requires) of one
/// band, values clamped to [0, 1].
std::string encode_pgm16(const Tensor3& cube, std::size_t band);

/// Flat CSV with one "m,n,l,value" row per voxel (0-based, optional header).
Tensor3 parse_voxel_csv(std::string_view text);

/// Sum of Gaussian blobs with smooth nonnegative spectra, scaled to max 1.
Tensor3 make_phantom(Dims dims, std::size_t blobs, std::uint64_t seed);

/// FNV-1a 64-bit digest, hex encoded.
std::string digest(std::string_view bytes);
std::string file_digest(const std::filesystem::path& path);

Dims parse_dims(const std::string& text);  // "MxNxL"

}  // namespace csi::io

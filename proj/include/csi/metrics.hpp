#pragma once

#include <cstddef>
#include <string>

#include "csi/tensor.hpp"

namespace csi {

inline constexpr double kPsnrCapDb = 100.0;

/// Band-averaged PSNR with unit peak; a band reproduced exactly contributes
/// kPsnrCapDb.
double psnr(const Tensor3& ref, const Tensor3& rec);

/// Band-averaged SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, evaluated over all fully-contained windows.
double ssim(const Tensor3& ref, const Tensor3& rec);

struct SamResult {
  double mean_rad = 0.0;
  std::size_t skipped = 0;  // pixels where either spectrum is all zeros
};

/// Mean spectral angle over pixels.
SamResult sam(const Tensor3& ref, const Tensor3& rec);

struct QualityRow {
  std::string name;
  double psnr_db;
  double ssim;
  double sam_rad;
};

QualityRow evaluate(const std::string& name, const Tensor3& ref, const Tensor3& rec);
std::string csv_header();
std::string csv_row(const QualityRow& row);

}  // namespace csi

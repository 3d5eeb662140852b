#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "csi/baseline.hpp"
#include "csi/cassi.hpp"
#include "csi/solver.hpp"

namespace csi {

struct Acquisition {
  CodedApertureSet aperture;
  MeasurementSet measurements;
};

struct AcquisitionConfig {
  std::size_t shots = 1;
  double snr_db = std::numeric_limits<double>::infinity();
  ApertureKind kind = ApertureKind::binary;
  double transmittance = 0.5;
  std::uint64_t seed = 0;  // aperture from mix_seed(seed, 0), noise from mix_seed(seed, 1)
};

/// Draws apertures, senses the scene and adds noise.
Acquisition simulate(const Tensor3& scene, const AcquisitionConfig& cfg);

struct RhoSweepRow {
  double rho;
  std::size_t trial;
  std::uint64_t seed;
  double psnr_db, ssim, sam_rad, final_loss;
};

/// One fit (single restart) per (rho, trial) on a fixed acquisition; trial t
/// initialises from mix_seed(fit.seed, t). Rows come back in (rho, trial) order.
std::vector<RhoSweepRow> rho_sweep(const Tensor3& scene, const Acquisition& acq,
                                   const std::vector<double>& rhos, std::size_t trials,
                                   const FitConfig& fit_cfg);
std::string rho_sweep_csv(const std::vector<RhoSweepRow>& rows);

struct GridRow {
  std::size_t shots;
  double snr_db;
  std::string metric;  // PSNR, SSIM or SAM
  double bp, fista_dct, dip, prop;  // means over trials
};

struct GridConfig {
  std::vector<std::size_t> shots{1, 2, 3, 4};
  std::vector<double> snrs{20.0, 30.0, std::numeric_limits<double>::infinity()};
  std::size_t trials = 1;
  ApertureKind kind = ApertureKind::binary;
  double transmittance = 0.5;
  std::uint64_t seed = 0;
  FitConfig fit;
  FistaOptions fista;
};

/// Shots x noise grid comparing back-projection, FISTA-DCT, DIP and the full
/// method. Three rows (PSNR, SSIM, SAM) per configuration, in grid order.
std::vector<GridRow> method_grid(const Tensor3& scene, const GridConfig& cfg);
std::string grid_csv(const std::vector<GridRow>& rows);

std::string format_snr(double snr_db);
double median(std::vector<double> v);

}  // namespace csi

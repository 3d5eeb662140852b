#include "csi/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "csi/error.hpp"
#include "csi/metrics.hpp"
#include "csi/random.hpp"

namespace csi {

namespace {

// Runs body(c) for every cell in parallel. The first exception thrown by any
// cell is rethrown on the calling thread once the loop has finished.
template <class Body>
void for_each_cell(std::size_t cells, Body body) {
  std::exception_ptr failure;
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(cells);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    try {
      body(static_cast<std::size_t>(c));
    } catch (...) {
#pragma omp critical(csi_cell_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void check_scene(const Tensor3& scene) {
  if (scene.dims().M < 11 || scene.dims().N < 11)
    throw ArgumentError("quality metrics need spatial extents of at least 11");
}

}  // namespace

Acquisition simulate(const Tensor3& scene, const AcquisitionConfig& cfg) {
  CodedApertureSet a =
      generate_aperture(cfg.kind, scene.dims(), cfg.shots, cfg.transmittance, mix_seed(cfg.seed, 0));
  MeasurementSet m = add_noise(forward(scene, a), cfg.snr_db, mix_seed(cfg.seed, 1));
  m.provenance().seed = cfg.seed;
  m.provenance().snr_db = cfg.snr_db;
  m.provenance().kind = cfg.kind;
  return {std::move(a), std::move(m)};
}

std::vector<RhoSweepRow> rho_sweep(const Tensor3& scene, const Acquisition& acq,
                                   const std::vector<double>& rhos, std::size_t trials,
                                   const FitConfig& fit_cfg) {
  if (trials < 1) throw ArgumentError("trials must be at least 1");
  check_scene(scene);
  fit_cfg.validate();
  const std::size_t cells = rhos.size() * trials;
  std::vector<RhoSweepRow> rows(cells);
  for_each_cell(cells, [&](std::size_t c) {
    const std::size_t ri = c / trials, t = c % trials;
    FitConfig cfg = fit_cfg;
    cfg.rho = rhos[ri];
    cfg.restarts = 1;
    cfg.seed = mix_seed(fit_cfg.seed, t);
    const FitResult r = fit(acq.measurements, acq.aperture, scene.dims(), cfg);
    const QualityRow q = evaluate("", scene, r.reconstruction);
    rows[c] = {rhos[ri], t, cfg.seed, q.psnr_db, q.ssim, q.sam_rad, r.restart_losses[0]};
  });
  return rows;
}

std::string rho_sweep_csv(const std::vector<RhoSweepRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "rho,trial,seed,psnr_db,ssim,sam_rad,final_loss\n";
  for (const auto& r : rows)
    os << r.rho << ',' << r.trial << ',' << r.seed << ',' << r.psnr_db << ',' << r.ssim << ',' << r.sam_rad
       << ',' << r.final_loss << '\n';
  return os.str();
}

std::vector<GridRow> method_grid(const Tensor3& scene, const GridConfig& cfg) {
  if (cfg.trials < 1) throw ArgumentError("trials must be at least 1");
  check_scene(scene);
  cfg.fit.validate();
  struct Cell {
    std::size_t shots;
    double snr;
    std::size_t trial;
    QualityRow bp, fista, dip, prop;
  };
  std::vector<Cell> cells;
  for (std::size_t s : cfg.shots)
    for (double snr : cfg.snrs)
      for (std::size_t t = 0; t < cfg.trials; ++t) cells.push_back({s, snr, t, {}, {}, {}, {}});

  for_each_cell(cells.size(), [&](std::size_t c) {
    Cell& cell = cells[c];
    AcquisitionConfig ac;
    ac.shots = cell.shots;
    ac.snr_db = cell.snr;
    ac.kind = cfg.kind;
    ac.transmittance = cfg.transmittance;
    ac.seed = mix_seed(cfg.seed, cell.trial);
    const Acquisition acq = simulate(scene, ac);
    const Dims d = scene.dims();
    cell.bp = evaluate("bp", scene, back_projection(acq.measurements, acq.aperture, d));
    cell.fista = evaluate("fista-dct", scene, fista_dct(acq.measurements, acq.aperture, d, cfg.fista).reconstruction);
    FitConfig fc = cfg.fit;
    fc.seed = mix_seed(cfg.fit.seed, cell.trial);
    fc.mode = FitMode::dip_fixed;
    cell.dip = evaluate("dip", scene, fit(acq.measurements, acq.aperture, d, fc).reconstruction);
    fc.mode = FitMode::full;
    cell.prop = evaluate("prop", scene, fit(acq.measurements, acq.aperture, d, fc).reconstruction);
  });

  std::vector<GridRow> rows;
  for (std::size_t i = 0; i < cells.size(); i += cfg.trials) {
    GridRow p{cells[i].shots, cells[i].snr, "PSNR", 0, 0, 0, 0};
    GridRow s{cells[i].shots, cells[i].snr, "SSIM", 0, 0, 0, 0};
    GridRow a{cells[i].shots, cells[i].snr, "SAM", 0, 0, 0, 0};
    const double w = 1.0 / static_cast<double>(cfg.trials);
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const Cell& c = cells[i + t];
      p.bp += w * c.bp.psnr_db, p.fista_dct += w * c.fista.psnr_db, p.dip += w * c.dip.psnr_db,
          p.prop += w * c.prop.psnr_db;
      s.bp += w * c.bp.ssim, s.fista_dct += w * c.fista.ssim, s.dip += w * c.dip.ssim, s.prop += w * c.prop.ssim;
      a.bp += w * c.bp.sam_rad, a.fista_dct += w * c.fista.sam_rad, a.dip += w * c.dip.sam_rad,
          a.prop += w * c.prop.sam_rad;
    }
    rows.push_back(p);
    rows.push_back(s);
    rows.push_back(a);
  }
  return rows;
}

std::string format_snr(double snr_db) {
  if (std::isinf(snr_db)) return "inf";
  std::ostringstream os;
  os << snr_db;
  return os.str();
}

std::string grid_csv(const std::vector<GridRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "shots,snr_db,metric,bp,fista_dct,dip,prop\n";
  for (const auto& r : rows)
    os << r.shots << ',' << format_snr(r.snr_db) << ',' << r.metric << ',' << r.bp << ',' << r.fista_dct << ','
       << r.dip << ',' << r.prop << '\n';
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace csi

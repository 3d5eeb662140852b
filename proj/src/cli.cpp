#include "csi/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "csi/baseline.hpp"
#include "csi/error.hpp"
#include "csi/experiments.hpp"
#include "csi/io.hpp"
#include "csi/metrics.hpp"
#include "csi/solver.hpp"

namespace csi::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Record {
  std::string command;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json seeds = json::object();
};

double parse_snr(const std::string& s) {
  if (s == "inf" || s == "Inf" || s == "INF") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v)) throw ArgumentError("SNR must be a number of dB or 'inf', got '" + s + "'");
  return v;
}

ApertureKind parse_kind(const std::string& s) {
  if (s == "bernoulli" || s == "binary") return ApertureKind::binary;
  if (s == "colored") return ApertureKind::colored;
  throw ArgumentError("unknown coded aperture kind '" + s + "' (expected bernoulli or colored)");
}

// Scene for sweep/grid: either a file (normalised on ingestion) or a phantom.
Tensor3 load_scene(const std::string& scene_path, const std::string& phantom_dims, std::size_t blobs,
                   std::uint64_t seed, bool normalize, Record& rec) {
  if (!scene_path.empty()) {
    Tensor3 t = io::read_scube(scene_path);
    rec.inputs.push_back(scene_path);
    if (normalize) io::normalize_cube(t);
    return t;
  }
  if (phantom_dims.empty()) throw ArgumentError("either --scene or --phantom is required");
  return io::make_phantom(io::parse_dims(phantom_dims), blobs, seed);
}

void add_fit_options(CLI::App* sub, FitConfig& cfg, std::string& net, std::string& mode) {
  sub->add_option("--net", net, "generator architecture: resnet or autoencoder")->capture_default_str();
  sub->add_option("--width", cfg.width, "generator width (0 = architecture default)")->capture_default_str();
  sub->add_option("--rho", cfg.rho, "Tucker rank factor in (0,1]")->capture_default_str();
  sub->add_option("--iters", cfg.iterations, "optimisation iterations")->capture_default_str();
  sub->add_option("--lr", cfg.learning_rate, "learning rate")->capture_default_str();
  sub->add_option("--restarts", cfg.restarts, "independent restarts")->capture_default_str();
  sub->add_option("--mode", mode, "full or dip")->capture_default_str();
  sub->add_option("--log-stride", cfg.log_stride, "trace stride in iterations")->capture_default_str();
}

void finish_fit_options(FitConfig& cfg, const std::string& net, const std::string& mode,
                        const std::string& optimizer) {
  cfg.arch = parse_architecture(net);
  cfg.mode = parse_fit_mode(mode);
  if (optimizer == "adam")
    cfg.optimizer = OptimizerKind::adam;
  else if (optimizer == "sgd")
    cfg.optimizer = OptimizerKind::sgd;
  else
    throw ArgumentError("unknown optimizer '" + optimizer + "' (expected adam or sgd)");
  cfg.validate();
}

void write_text(const std::string& path, const std::string& text, Record& rec) {
  io::write_file(path, text);
  rec.outputs.push_back(path);
}

void append_manifest(const fs::path& path, const std::vector<std::string>& args, const Record& rec) {
  json line;
  line["format"] = "csi-manifest-1";
  line["command"] = rec.command;
  line["argv"] = args;
  line["seeds"] = rec.seeds;
  line["inputs"] = json::array();
  for (const auto& p : rec.inputs) line["inputs"].push_back({{"path", p}, {"digest", io::file_digest(p)}});
  line["outputs"] = json::array();
  for (const auto& p : rec.outputs) line["outputs"].push_back({{"path", p}, {"digest", io::file_digest(p)}});
  std::ofstream out(path, std::ios::app);
  if (!out) throw ArgumentError("cannot append to manifest '" + path.string() + "'");
  out << line.dump() << '\n';
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool write_manifest);

int replay(const std::string& manifest, long line_no, std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest);
  if (!in) throw ArgumentError("cannot open manifest '" + manifest + "'");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) lines.push_back(l);
  if (lines.empty()) throw FormatError("manifest is empty", 0);
  const long idx = line_no < 0 ? static_cast<long>(lines.size()) - 1 : line_no;
  if (idx < 0 || idx >= static_cast<long>(lines.size()))
    throw ArgumentError("manifest has " + std::to_string(lines.size()) + " records");
  json rec;
  try {
    rec = json::parse(lines[idx]);
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest record is not JSON: ") + e.what(), 0);
  }
  const auto argv = rec.at("argv").get<std::vector<std::string>>();
  for (const auto& i : rec.at("inputs"))
    if (io::file_digest(i.at("path").get<std::string>()) != i.at("digest").get<std::string>())
      err << "warning: input " << i.at("path").get<std::string>() << " changed since it was recorded\n";
  const int code = dispatch(argv, out, err, false);
  if (code != kOk) return code;
  bool same = true;
  for (const auto& o : rec.at("outputs")) {
    const auto path = o.at("path").get<std::string>();
    const auto now = io::file_digest(path);
    const bool match = now == o.at("digest").get<std::string>();
    same = same && match;
    out << (match ? "match    " : "MISMATCH ") << path << ' ' << now << '\n';
  }
  return same ? kOk : kNumericalFailure;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool write_manifest) {
  CLI::App app{"Compressive spectral imaging: CASSI simulation and untrained low-rank deep-prior reconstruction",
               "csi"};
  app.require_subcommand(1);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "manifest file (default: <output>.manifest.jsonl)");

  Record rec;

  // phantom
  std::string ph_dims = "32x32x8", ph_out;
  std::size_t ph_blobs = 6;
  std::uint64_t ph_seed = 0;
  auto* phantom = app.add_subcommand("phantom", "synthesise a smooth spectral phantom");
  phantom->add_option("--dims", ph_dims, "MxNxL")->capture_default_str();
  phantom->add_option("--blobs", ph_blobs)->capture_default_str();
  phantom->add_option("--seed", ph_seed)->capture_default_str();
  phantom->add_option("--out", ph_out)->required();

  // simulate
  std::string sim_scene, sim_out, sim_ca_out, sim_snr = "inf", sim_ca = "bernoulli";
  std::size_t sim_shots = 1;
  double sim_tr = 0.5;
  std::uint64_t sim_seed = 0;
  bool sim_no_norm = false;
  auto* simulate_cmd = app.add_subcommand("simulate", "sense a cube with random coded apertures");
  simulate_cmd->add_option("--scene", sim_scene)->required();
  simulate_cmd->add_option("--shots", sim_shots)->capture_default_str();
  simulate_cmd->add_option("--snr", sim_snr, "dB or inf")->capture_default_str();
  simulate_cmd->add_option("--ca", sim_ca, "bernoulli or colored")->capture_default_str();
  simulate_cmd->add_option("--transmittance", sim_tr)->capture_default_str();
  simulate_cmd->add_option("--seed", sim_seed)->capture_default_str();
  simulate_cmd->add_option("--out", sim_out)->required();
  simulate_cmd->add_option("--ca-out", sim_ca_out)->required();
  simulate_cmd->add_flag("--no-normalize", sim_no_norm, "keep the cube's original scale");

  // reconstruct
  FitConfig rc_cfg;
  std::string rc_meas, rc_ca, rc_out, rc_trace, rc_truth, rc_net = "resnet", rc_mode = "full", rc_opt = "adam";
  auto* recon = app.add_subcommand("reconstruct", "fit the generator and Tucker latent to measurements");
  recon->add_option("--meas", rc_meas)->required();
  recon->add_option("--ca", rc_ca)->required();
  add_fit_options(recon, rc_cfg, rc_net, rc_mode);
  recon->add_option("--optimizer", rc_opt, "adam or sgd")->capture_default_str();
  recon->add_option("--seed", rc_cfg.seed)->capture_default_str();
  recon->add_option("--out", rc_out)->required();
  recon->add_option("--trace", rc_trace, "residual trace CSV");
  recon->add_option("--truth", rc_truth, "ground truth cube for the PSNR trace column");

  // baseline
  std::string bl_meas, bl_ca, bl_out, bl_method = "fista-dct";
  double bl_lambda = 0.0;
  std::size_t bl_iters = 300;
  auto* baseline = app.add_subcommand("baseline", "back-projection or DCT-l1 FISTA reconstruction");
  baseline->add_option("--meas", bl_meas)->required();
  baseline->add_option("--ca", bl_ca)->required();
  baseline->add_option("--method", bl_method, "bp or fista-dct")->capture_default_str();
  baseline->add_option("--lambda", bl_lambda, "l1 weight (default 0.01*||H^T y||_inf in the DCT basis)");
  baseline->add_option("--iters", bl_iters)->capture_default_str();
  baseline->add_option("--out", bl_out)->required();

  // metrics
  std::string mt_ref, mt_rec, mt_out, mt_name = "rec";
  auto* metrics_cmd = app.add_subcommand("metrics", "PSNR / SSIM / SAM of a reconstruction");
  metrics_cmd->add_option("--ref", mt_ref)->required();
  metrics_cmd->add_option("--rec", mt_rec)->required();
  metrics_cmd->add_option("--out", mt_out)->required();
  metrics_cmd->add_option("--name", mt_name)->capture_default_str();

  // sweep-rho
  FitConfig sw_cfg;
  sw_cfg.iterations = 2000;
  std::string sw_scene, sw_phantom, sw_out, sw_net = "resnet", sw_mode = "full", sw_ca = "bernoulli";
  std::vector<double> sw_rhos{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t sw_trials = 5, sw_shots = 1, sw_blobs = 6;
  double sw_tr = 0.5;
  std::uint64_t sw_seed = 0;
  auto* sweep = app.add_subcommand("sweep-rho", "rank-factor sweep, one CSV row per (rho, trial)");
  sweep->add_option("--scene", sw_scene);
  sweep->add_option("--phantom", sw_phantom, "MxNxL phantom instead of a scene file");
  sweep->add_option("--blobs", sw_blobs)->capture_default_str();
  sweep->add_option("--rhos", sw_rhos)->delimiter(',')->capture_default_str();
  sweep->add_option("--trials", sw_trials)->capture_default_str();
  sweep->add_option("--shots", sw_shots)->capture_default_str();
  sweep->add_option("--ca", sw_ca)->capture_default_str();
  sweep->add_option("--transmittance", sw_tr)->capture_default_str();
  add_fit_options(sweep, sw_cfg, sw_net, sw_mode);
  sweep->add_option("--seed", sw_seed)->capture_default_str();
  sweep->add_option("--out", sw_out)->required();

  // grid
  GridConfig gr_cfg;
  gr_cfg.fit.iterations = 2000;
  gr_cfg.fit.restarts = 1;
  std::string gr_scene, gr_phantom, gr_out, gr_net = "resnet", gr_mode = "full", gr_ca = "bernoulli";
  std::vector<std::size_t> gr_shots{1, 2, 3, 4};
  std::vector<std::string> gr_snrs{"20", "30", "inf"};
  std::size_t gr_blobs = 6;
  auto* grid = app.add_subcommand("grid", "shots x noise comparison table");
  grid->add_option("--scene", gr_scene);
  grid->add_option("--phantom", gr_phantom, "MxNxL phantom instead of a scene file");
  grid->add_option("--blobs", gr_blobs)->capture_default_str();
  grid->add_option("--shots", gr_shots)->delimiter(',')->capture_default_str();
  grid->add_option("--snrs", gr_snrs)->delimiter(',')->capture_default_str();
  grid->add_option("--trials", gr_cfg.trials)->capture_default_str();
  grid->add_option("--ca", gr_ca)->capture_default_str();
  grid->add_option("--transmittance", gr_cfg.transmittance)->capture_default_str();
  grid->add_option("--fista-iters", gr_cfg.fista.iterations)->capture_default_str();
  add_fit_options(grid, gr_cfg.fit, gr_net, gr_mode);
  grid->add_option("--seed", gr_cfg.seed)->capture_default_str();
  grid->add_option("--out", gr_out)->required();

  // export-band
  std::string eb_scene, eb_out;
  std::size_t eb_band = 0;
  auto* export_band = app.add_subcommand("export-band", "write one band as a 16-bit PGM");
  export_band->add_option("--scene", eb_scene)->required();
  export_band->add_option("--band", eb_band)->required();
  export_band->add_option("--out", eb_out)->required();

  // convert
  std::string cv_csv, cv_out;
  auto* convert = app.add_subcommand("convert", "flat voxel CSV (m,n,l,value) to SCB1");
  convert->add_option("--csv", cv_csv)->required();
  convert->add_option("--out", cv_out)->required();

  // replay
  std::string rp_manifest;
  long rp_line = -1;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a manifest record and compare output digests");
  replay_cmd->add_option("--manifest", rp_manifest)->required();
  replay_cmd->add_option("--line", rp_line, "0-based record index (default: last)");

  std::vector<std::string> argv_store{"csi"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kArgumentError;
  }

  if (*phantom) {
    rec.command = "phantom";
    rec.seeds["seed"] = ph_seed;
    io::write_scube(ph_out, io::make_phantom(io::parse_dims(ph_dims), ph_blobs, ph_seed));
    rec.outputs.push_back(ph_out);
  } else if (*simulate_cmd) {
    rec.command = "simulate";
    rec.seeds["seed"] = sim_seed;
    Tensor3 scene = io::read_scube(sim_scene);
    rec.inputs.push_back(sim_scene);
    const double scale = sim_no_norm ? 1.0 : io::normalize_cube(scene);
    if (!is_compressive(scene.dims(), sim_shots))
      err << "warning: " << sim_shots << " shots give at least as many measurements as voxels\n";
    AcquisitionConfig ac;
    ac.shots = sim_shots;
    ac.snr_db = parse_snr(sim_snr);
    ac.kind = parse_kind(sim_ca);
    ac.transmittance = sim_tr;
    ac.seed = sim_seed;
    const Acquisition acq = simulate(scene, ac);
    io::write_smea(sim_out, acq.measurements);
    io::write_aperture(sim_ca_out, acq.aperture);
    rec.outputs.push_back(sim_out);
    rec.outputs.push_back(sim_ca_out);
    if (!sim_no_norm) {
      io::write_scale_sidecar(sim_out, scale);
      rec.outputs.push_back(io::scale_sidecar_path(sim_out).string());
    }
  } else if (*recon) {
    rec.command = "reconstruct";
    rec.seeds["seed"] = rc_cfg.seed;
    finish_fit_options(rc_cfg, rc_net, rc_mode, rc_opt);
    const MeasurementSet m = io::read_smea(rc_meas);
    const CodedApertureSet a = io::read_aperture(rc_ca);
    rec.inputs = {rc_meas, rc_ca};
    std::optional<Tensor3> truth;
    if (!rc_truth.empty()) {
      truth = io::read_scube(rc_truth);
      rec.inputs.push_back(rc_truth);
    }
    const Dims d = a.scene_dims();
    const FitState probe = init_state(d, rc_cfg, 0);
    err << "generator " << to_string(rc_cfg.arch) << ": " << probe.generator.parameter_count()
        << " parameters; latent: " << probe.latent.parameter_count() << " parameters\n";
    if (probe.latent.parameter_count() >= d.size())
      err << "warning: latent has at least as many parameters as the cube\n";
    const FitResult r = fit(m, a, d, rc_cfg, truth ? &*truth : nullptr);
    io::write_scube(rc_out, r.reconstruction);
    rec.outputs.push_back(rc_out);
    if (!rc_trace.empty()) write_text(rc_trace, trace_csv(r), rec);
    err << "best restart " << r.best_restart << " final loss " << r.restart_losses[r.best_restart] << " ("
        << r.wall_seconds << " s)\n";
  } else if (*baseline) {
    rec.command = "baseline";
    const MeasurementSet m = io::read_smea(bl_meas);
    const CodedApertureSet a = io::read_aperture(bl_ca);
    rec.inputs = {bl_meas, bl_ca};
    const Dims d = a.scene_dims();
    Tensor3 x;
    if (bl_method == "bp") {
      x = back_projection(m, a, d);
    } else if (bl_method == "fista-dct") {
      FistaOptions o;
      o.iterations = bl_iters;
      if (bl_lambda > 0.0) o.lambda = bl_lambda;
      x = fista_dct(m, a, d, o).reconstruction;
    } else {
      throw ArgumentError("unknown baseline '" + bl_method + "' (expected bp or fista-dct)");
    }
    io::write_scube(bl_out, x);
    rec.outputs.push_back(bl_out);
  } else if (*metrics_cmd) {
    rec.command = "metrics";
    const Tensor3 ref = io::read_scube(mt_ref), r = io::read_scube(mt_rec);
    rec.inputs = {mt_ref, mt_rec};
    const QualityRow q = evaluate(mt_name, ref, r);
    write_text(mt_out, csv_header() + "\n" + csv_row(q) + "\n", rec);
    out << csv_row(q) << '\n';
  } else if (*sweep) {
    rec.command = "sweep-rho";
    rec.seeds["seed"] = sw_seed;
    finish_fit_options(sw_cfg, sw_net, sw_mode, "adam");
    sw_cfg.seed = sw_seed;
    const Tensor3 scene = load_scene(sw_scene, sw_phantom, sw_blobs, sw_seed, true, rec);
    AcquisitionConfig ac;
    ac.shots = sw_shots;
    ac.kind = parse_kind(sw_ca);
    ac.transmittance = sw_tr;
    ac.seed = sw_seed;
    const Acquisition acq = simulate(scene, ac);
    for (double r : sw_rhos)
      if (!(r > 0.0 && r <= 1.0)) throw ArgumentError("every rank factor must lie in (0, 1]");
    write_text(sw_out, rho_sweep_csv(rho_sweep(scene, acq, sw_rhos, sw_trials, sw_cfg)), rec);
  } else if (*grid) {
    rec.command = "grid";
    rec.seeds["seed"] = gr_cfg.seed;
    finish_fit_options(gr_cfg.fit, gr_net, gr_mode, "adam");
    gr_cfg.fit.seed = gr_cfg.seed;
    gr_cfg.kind = parse_kind(gr_ca);
    gr_cfg.shots = gr_shots;
    gr_cfg.snrs.clear();
    for (const auto& s : gr_snrs) gr_cfg.snrs.push_back(parse_snr(s));
    const Tensor3 scene = load_scene(gr_scene, gr_phantom, gr_blobs, gr_cfg.seed, true, rec);
    write_text(gr_out, grid_csv(method_grid(scene, gr_cfg)), rec);
  } else if (*export_band) {
    rec.command = "export-band";
    const Tensor3 scene = io::read_scube(eb_scene);
    rec.inputs.push_back(eb_scene);
    write_text(eb_out, io::encode_pgm16(scene, eb_band), rec);
  } else if (*convert) {
    rec.command = "convert";
    const Tensor3 t = io::parse_voxel_csv(io::read_file(cv_csv));
    rec.inputs.push_back(cv_csv);
    io::write_scube(cv_out, t);
    rec.outputs.push_back(cv_out);
  } else if (*replay_cmd) {
    return replay(rp_manifest, rp_line, out, err);
  }

  if (write_manifest && !rec.outputs.empty()) {
    const fs::path mpath = manifest_path.empty() ? fs::path(rec.outputs.front() + ".manifest.jsonl")
                                                 : fs::path(manifest_path);
    append_manifest(mpath, args, rec);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err, true);
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return kFormatError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kArgumentError;
  } catch (const nlohmann::json::exception& e) {
    err << "format error: " << e.what() << '\n';
    return kFormatError;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace csi::cli

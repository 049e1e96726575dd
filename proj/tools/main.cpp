// diffeoflow command-line driver: pairwise and multi-frame registration,
// bandwidth sweeps, strain reports, synthetic shape generation.

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "diffeoflow/admm.hpp"
#include "diffeoflow/io.hpp"
#include "diffeoflow/strain.hpp"
#include "diffeoflow/synth.hpp"

namespace fs = std::filesystem;
using namespace diffeoflow;

namespace {

// DIFFEOFLOW_THREADS caps internal parallelism; 0 (the default) selects
// the fully reproducible mode in which wall-clock fields of the output
// files are suppressed so repeated runs are byte-identical.
int thread_cap() {
  const char* env = std::getenv("DIFFEOFLOW_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  return std::max(0, std::atoi(env));
}

bool include_timings() { return thread_cap() > 0; }

std::string fmt17(double value) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

struct RegisterOverrides {
  std::optional<int> n;
  std::optional<double> alpha, rho, tau_v, tau_s;
  std::optional<int> max_iter;
  std::optional<unsigned long> seed;
};

SolverConfig resolve_config(const std::string& config_path, const RegisterOverrides& ov) {
  SolverConfig cfg;
  if (!config_path.empty()) cfg = read_config(config_path);
  if (ov.n) cfg.n = *ov.n;
  if (ov.alpha) cfg.alpha = *ov.alpha;
  if (ov.rho) cfg.rho = *ov.rho;
  if (ov.tau_v) cfg.tau_v = *ov.tau_v;
  if (ov.tau_s) cfg.tau_s = *ov.tau_s;
  if (ov.max_iter) cfg.n_iter = *ov.max_iter;
  if (ov.seed) cfg.seed = *ov.seed;
  validate(cfg);
  return cfg;
}

void add_override_flags(CLI::App* cmd, RegisterOverrides& ov) {
  cmd->add_option("--n", ov.n, "Number of time cells");
  cmd->add_option("--alpha", ov.alpha, "Kernel distance weight");
  cmd->add_option("--rho", ov.rho, "Splitting parameter");
  cmd->add_option("--tau-v", ov.tau_v, "Velocity bandwidth scaling");
  cmd->add_option("--tau-s", ov.tau_s, "Distance bandwidth scaling");
  cmd->add_option("--max-iter", ov.max_iter, "Iteration cap");
  cmd->add_option("--seed", ov.seed, "Seed echoed into outputs");
}

int exit_code_for(const RegistrationResult& result) {
  if (result.decision.converged()) return 0;
  return result.decision.c5 ? 2 : 1;
}

std::map<std::string, double> parse_params(const std::string& text) {
  std::map<std::string, double> params;
  if (text.empty()) return params;
  size_t start = 0;
  while (start <= text.size()) {
    const size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    const size_t eq = item.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("bad --params item '" + item + "' (expected key=value)");
    params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    start = end + 1;
    if (end == text.size()) break;
  }
  return params;
}

double take_param(std::map<std::string, double>& params, const std::string& key,
                  double fallback) {
  const auto it = params.find(key);
  if (it == params.end()) return fallback;
  const double value = it->second;
  params.erase(it);
  return value;
}

std::vector<fs::path> frame_paths(const std::string& spec) {
  std::vector<fs::path> paths;
  if (fs::is_directory(spec)) {
    for (const auto& entry : fs::directory_iterator(spec)) {
      const auto ext = entry.path().extension().string();
      if (ext == ".csv" || ext == ".obj") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
  } else {
    size_t start = 0;
    while (start < spec.size()) {
      const size_t end = std::min(spec.find(',', start), spec.size());
      if (end > start) paths.emplace_back(spec.substr(start, end - start));
      start = end + 1;
    }
  }
  return paths;
}

int cmd_register(const std::string& template_path, const std::string& target_path,
                 const std::string& config_path, const std::string& out_dir,
                 const RegisterOverrides& ov) {
  const Shape tmpl = read_shape(template_path);
  const Shape target = read_shape(target_path);
  const SolverConfig cfg = resolve_config(config_path, ov);
  const RegistrationResult result = register_pair(tmpl, target, cfg);
  write_result(result, out_dir, include_timings());
  std::cerr << "register: " << result.termination << " after " << result.log.size()
            << " iterations, censored Hausdorff " << result.final_hausdorff << " ("
            << 100.0 * result.final_hausdorff / std::max(result.initial_hausdorff, 1e-300)
            << "% of initial), " << result.runtime_s << " s\n";
  return exit_code_for(result);
}

int cmd_multiframe(const std::string& frames_spec, const std::string& config_path,
                   const std::string& out_dir) {
  const auto paths = frame_paths(frames_spec);
  if (paths.size() < 2) throw std::runtime_error("multiframe: need at least 2 frames");
  std::vector<Shape> frames;
  frames.reserve(paths.size());
  for (const auto& path : paths) frames.push_back(read_shape(path));
  SolverConfig cfg;
  if (!config_path.empty()) cfg = read_config(config_path);
  const RegistrationResult result = register_multiframe(frames, cfg);
  write_result(result, out_dir, include_timings());
  std::cerr << "multiframe: " << paths.size() << " frames, " << result.termination
            << " after " << result.log.size() << " iterations, censored Hausdorff "
            << result.final_hausdorff << ", " << result.runtime_s << " s\n";
  return exit_code_for(result);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  size_t start = 0;
  while (start < text.size()) {
    const size_t end = std::min(text.find(',', start), text.size());
    if (end > start) values.push_back(std::stod(text.substr(start, end - start)));
    start = end + 1;
  }
  if (values.empty()) throw std::runtime_error("empty value list");
  return values;
}

int cmd_sweep(const std::string& template_path, const std::string& target_path,
              const std::string& tau_v_list, const std::string& tau_s_list,
              int iters_fixed, const std::string& out_dir) {
  const Shape tmpl = read_shape(template_path);
  const Shape target = read_shape(target_path);
  const auto tau_vs = parse_list(tau_v_list);
  const auto tau_ss = parse_list(tau_s_list);

  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "sweep.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open sweep.csv for writing");
  out << "tau_v,tau_s,final_hausdorff,final_pct,primal_norm,primal_rel,dual_norm,"
         "dual_rel,runtime_s\n";
  const bool timings = include_timings();
  for (const double tau_v : tau_vs) {
    for (const double tau_s : tau_ss) {
      SolverConfig cfg;
      cfg.tau_v = tau_v;
      cfg.tau_s = tau_s;
      cfg.n_iter = iters_fixed;
      cfg.stop_only_iter_cap = true;  // fixed iteration count, C5 only
      out << fmt17(tau_v) << ',' << fmt17(tau_s) << ',';
      try {
        const RegistrationResult result = register_pair(tmpl, target, cfg);
        const auto& last = result.log.back();
        const size_t ref_row = result.log.size() >= 2 ? 1 : 0;
        const double prim_ref = result.log[ref_row].prim_norm;
        const double dual_ref = result.log[ref_row].dual_norm;
        out << fmt17(result.final_hausdorff) << ','
            << fmt17(100.0 * result.final_hausdorff /
                     std::max(result.initial_hausdorff, 1e-300))
            << ',' << fmt17(last.prim_norm) << ','
            << fmt17(prim_ref > 0.0 ? last.prim_norm / prim_ref : 0.0) << ','
            << fmt17(last.dual_norm) << ','
            << fmt17(dual_ref > 0.0 ? last.dual_norm / dual_ref : 0.0) << ','
            << fmt17(timings ? result.runtime_s : 0.0) << "\n";
      } catch (const std::exception& err) {
        std::cerr << "sweep cell tau_v=" << tau_v << " tau_s=" << tau_s
                  << " failed: " << err.what() << "\n";
        out << "nan,nan,nan,nan,nan,nan,nan\n";
      }
    }
  }
  return 0;
}

int cmd_synth(const std::string& kind, int m, const std::string& params_text,
              unsigned long seed, const std::string& out_path) {
  auto params = parse_params(params_text);
  Shape shape;
  if (kind == "sphere") {
    const double radius = take_param(params, "radius", 1.0);
    const double jitter = take_param(params, "jitter", 0.0);
    shape = synth_sphere(m, radius, seed, jitter);
  } else if (kind == "ellipsoid") {
    const Vec3 axes(take_param(params, "ax", 1.0), take_param(params, "ay", 1.0),
                    take_param(params, "az", 1.0));
    const double jitter = take_param(params, "jitter", 0.0);
    shape = synth_ellipsoid(m, axes, seed, jitter);
  } else if (kind == "sheet") {
    const double bend = take_param(params, "bend", 0.3);
    const double jitter = take_param(params, "jitter", 0.0);
    shape = synth_sheet(m, bend, seed, jitter);
  } else {
    throw std::runtime_error("unknown shape kind '" + kind + "'");
  }
  if (!params.empty())
    throw std::runtime_error("unused --params key '" + params.begin()->first + "'");
  write_shape(out_path, shape);
  std::cerr << "synth: wrote " << shape.size() << " points ("
            << shape.triangles.rows() << " triangles) to " << out_path << "\n";
  return 0;
}

int cmd_strain(const std::string& template_path, const std::string& deformed_path,
               const std::string& out_dir) {
  const Shape tmpl = read_shape(template_path);
  const Shape deformed = read_shape(deformed_path);
  const StrainField field = strain_field(tmpl, deformed.points);
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "strain.csv", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open strain.csv for writing");
  out << "vertex_index,p_iso\n";
  for (Index i = 0; i < field.per_vertex_p.size(); ++i)
    out << i << ',' << fmt17(field.per_vertex_p[i]) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffeoflow: diffeomorphic matching of 3D point-cloud surfaces"};
  app.require_subcommand(1);

  // register
  auto* reg = app.add_subcommand("register", "Register a template onto a target shape");
  std::string reg_template, reg_target, reg_config, reg_out;
  RegisterOverrides reg_ov;
  reg->add_option("--template", reg_template, "Template shape (.csv/.obj)")->required();
  reg->add_option("--target", reg_target, "Target shape (.csv/.obj)")->required();
  reg->add_option("--config", reg_config, "Solver config JSON (summary.json schema)");
  reg->add_option("--out", reg_out, "Output directory")->required();
  add_override_flags(reg, reg_ov);

  // multiframe
  auto* mf = app.add_subcommand("multiframe", "Register a time series of frames");
  std::string mf_frames, mf_config, mf_out;
  mf->add_option("--frames", mf_frames, "Directory of frames or comma-separated list")
      ->required();
  mf->add_option("--config", mf_config, "Solver config JSON");
  mf->add_option("--out", mf_out, "Output directory")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Bandwidth sweep with fixed iterations");
  std::string sw_template, sw_target, sw_tauv, sw_taus, sw_out;
  int sw_iters = 100;
  sweep->add_option("--template", sw_template, "Template shape")->required();
  sweep->add_option("--target", sw_target, "Target shape")->required();
  sweep->add_option("--tau-v-list", sw_tauv, "Comma-separated tau_v values")->required();
  sweep->add_option("--tau-s-list", sw_taus, "Comma-separated tau_s values")->required();
  sweep->add_option("--iters-fixed", sw_iters, "Fixed iteration count per cell");
  sweep->add_option("--out", sw_out, "Output directory")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic meshed shape");
  std::string sy_shape, sy_params, sy_out;
  int sy_m = 100;
  unsigned long sy_seed = 0;
  synth->add_option("--shape", sy_shape, "sphere | ellipsoid | sheet")->required();
  synth->add_option("--m", sy_m, "Point count")->required();
  synth->add_option("--params", sy_params,
                    "key=value list (radius, ax, ay, az, bend, jitter)");
  synth->add_option("--seed", sy_seed, "Jitter seed");
  synth->add_option("--out", sy_out, "Output file (.csv/.obj)")->required();

  // strain
  auto* strain = app.add_subcommand("strain", "Strain of a deformation on a mesh");
  std::string st_template, st_deformed, st_out;
  strain->add_option("--template", st_template, "Meshed template shape (.obj)")->required();
  strain->add_option("--deformed", st_deformed, "Deformed points (.csv/.obj)")->required();
  strain->add_option("--out", st_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*reg) return cmd_register(reg_template, reg_target, reg_config, reg_out, reg_ov);
    if (*mf) return cmd_multiframe(mf_frames, mf_config, mf_out);
    if (*sweep) return cmd_sweep(sw_template, sw_target, sw_tauv, sw_taus, sw_iters, sw_out);
    if (*synth) return cmd_synth(sy_shape, sy_m, sy_params, sy_seed, sy_out);
    if (*strain) return cmd_strain(st_template, st_deformed, st_out);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}

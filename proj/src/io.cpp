#include "diffeoflow/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace diffeoflow {

namespace {

using nlohmann::json;

// Locale-independent shortest-exact formatting: 17 significant digits
// round-trip any double.
std::string fmt(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return {buf, ptr};
}

double parse_double(std::string_view text, int line_no) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad number '" +
                             std::string(text) + "'");
  return value;
}

long parse_int(std::string_view text, int line_no) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad integer '" +
                             std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

Shape read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("line 1: missing csv header");
  const auto header = split(trim_cr(line), ',');
  const std::vector<std::string> known = {"x", "y", "z", "leaflet", "boundary", "weight"};
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "z")
    throw std::runtime_error("line 1: csv header must start with x,y,z");
  bool has_leaflet = false, has_boundary = false, has_weight = false;
  for (size_t i = 3; i < header.size(); ++i) {
    if (header[i] == "leaflet" && !has_leaflet && !has_boundary && !has_weight)
      has_leaflet = true;
    else if (header[i] == "boundary" && !has_boundary && !has_weight)
      has_boundary = true;
    else if (header[i] == "weight" && !has_weight)
      has_weight = true;
    else
      throw std::runtime_error("line 1: unexpected csv column '" + std::string(header[i]) + "'");
  }

  std::vector<double> coords;
  std::vector<int> leaflet;
  std::vector<bool> boundary;
  std::vector<double> weights;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim_cr(line);
    if (text.empty()) continue;
    const auto fields = split(text, ',');
    if (fields.size() != header.size())
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    size_t f = 0;
    for (int c = 0; c < 3; ++c) coords.push_back(parse_double(fields[f++], line_no));
    if (has_leaflet) leaflet.push_back(static_cast<int>(parse_int(fields[f++], line_no)));
    if (has_boundary) {
      const long flag = parse_int(fields[f++], line_no);
      if (flag != 0 && flag != 1)
        throw std::runtime_error("line " + std::to_string(line_no) + ": boundary must be 0 or 1");
      boundary.push_back(flag == 1);
    }
    if (has_weight) weights.push_back(parse_double(fields[f++], line_no));
  }

  const Index m = static_cast<Index>(coords.size() / 3);
  if (m == 0) throw std::runtime_error("csv: no points");
  Shape shape;
  shape.points.resize(m, 3);
  for (Index i = 0; i < m; ++i)
    shape.points.row(i) << coords[3 * i], coords[3 * i + 1], coords[3 * i + 2];
  if (has_leaflet) {
    shape.leaflet.resize(m);
    for (Index i = 0; i < m; ++i) shape.leaflet[i] = leaflet[i];
  }
  if (has_boundary) {
    shape.boundary.resize(m);
    for (Index i = 0; i < m; ++i) shape.boundary[i] = boundary[i];
  }
  if (has_weight) {
    shape.weights.resize(m);
    for (Index i = 0; i < m; ++i) shape.weights[i] = weights[i];
  } else {
    shape.weights = VecX::Constant(m, 1.0 / static_cast<double>(m));
  }
  validate(shape);
  return shape;
}

Shape read_obj(std::istream& in, bool fan_polygons) {
  std::vector<double> coords;
  std::vector<std::array<int, 3>> triangles;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = trim_cr(line);
    if (text.empty() || text[0] == '#') continue;
    std::istringstream fields{std::string(text)};
    std::string tag;
    fields >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(fields >> x >> y >> z))
        throw std::runtime_error("line " + std::to_string(line_no) + ": bad v record");
      coords.insert(coords.end(), {x, y, z});
    } else if (tag == "f") {
      std::vector<int> verts;
      std::string token;
      while (fields >> token) {
        // accept v/vt/vn references, use the vertex index only
        const auto slash = token.find('/');
        const auto head = std::string_view(token).substr(0, slash);
        const long idx = parse_int(head, line_no);
        if (idx < 1)
          throw std::runtime_error("line " + std::to_string(line_no) +
                                   ": face indices must be positive (1-based)");
        verts.push_back(static_cast<int>(idx - 1));
      }
      if (verts.size() < 3)
        throw std::runtime_error("line " + std::to_string(line_no) + ": face needs 3+ vertices");
      if (verts.size() > 3 && !fan_polygons)
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": non-triangle face (fan triangulation disabled)");
      for (size_t k = 2; k < verts.size(); ++k)
        triangles.push_back({verts[0], verts[k - 1], verts[k]});
    } else if (tag == "vn" || tag == "vt" || tag == "o" || tag == "g" || tag == "s" ||
               tag == "mtllib" || tag == "usemtl") {
      continue;
    } else {
      throw std::runtime_error("line " + std::to_string(line_no) + ": unsupported record '" +
                               tag + "'");
    }
  }
  const Index m = static_cast<Index>(coords.size() / 3);
  if (m == 0) throw std::runtime_error("obj: no vertices");
  MatX3 points(m, 3);
  for (Index i = 0; i < m; ++i)
    points.row(i) << coords[3 * i], coords[3 * i + 1], coords[3 * i + 2];
  TriangleList tris(static_cast<Index>(triangles.size()), 3);
  for (Index t = 0; t < tris.rows(); ++t)
    tris.row(t) << triangles[t][0], triangles[t][1], triangles[t][2];
  return make_shape(std::move(points), std::move(tris));
}

void write_csv(std::ostream& out, const Shape& shape) {
  const Index m = shape.size();
  const bool uniform =
      shape.weights == VecX::Constant(m, 1.0 / static_cast<double>(m));
  out << "x,y,z";
  if (shape.has_leaflet()) out << ",leaflet";
  if (shape.has_boundary()) out << ",boundary";
  if (!uniform) out << ",weight";
  out << "\n";
  for (Index i = 0; i < m; ++i) {
    out << fmt(shape.points(i, 0)) << ',' << fmt(shape.points(i, 1)) << ','
        << fmt(shape.points(i, 2));
    if (shape.has_leaflet()) out << ',' << shape.leaflet[i];
    if (shape.has_boundary()) out << ',' << (shape.boundary[i] ? 1 : 0);
    if (!uniform) out << ',' << fmt(shape.weights[i]);
    out << "\n";
  }
}

void write_obj(std::ostream& out, const Shape& shape) {
  for (Index i = 0; i < shape.size(); ++i)
    out << "v " << fmt(shape.points(i, 0)) << ' ' << fmt(shape.points(i, 1)) << ' '
        << fmt(shape.points(i, 2)) << "\n";
  for (Index t = 0; t < shape.triangles.rows(); ++t)
    out << "f " << shape.triangles(t, 0) + 1 << ' ' << shape.triangles(t, 1) + 1 << ' '
        << shape.triangles(t, 2) + 1 << "\n";
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

ShapeFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return ShapeFormat::csv;
  if (ext == ".obj") return ShapeFormat::obj;
  throw std::runtime_error("unknown shape format for '" + path.string() +
                           "' (expected .csv or .obj)");
}

Shape read_shape(std::istream& in, ShapeFormat format, bool fan_polygons) {
  return format == ShapeFormat::csv ? read_csv(in) : read_obj(in, fan_polygons);
}

Shape read_shape(const std::filesystem::path& path, bool fan_polygons) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return read_shape(in, format_from_path(path), fan_polygons);
  } catch (const std::exception& err) {
    throw std::runtime_error(path.string() + ": " + err.what());
  }
}

void write_shape(std::ostream& out, const Shape& shape, ShapeFormat format) {
  validate(shape);
  if (format == ShapeFormat::csv)
    write_csv(out, shape);
  else
    write_obj(out, shape);
}

void write_shape(const std::filesystem::path& path, const Shape& shape) {
  auto out = open_out(path);
  write_shape(out, shape, format_from_path(path));
}

namespace {

void write_blocks_csv(const std::filesystem::path& path, const BlockVec& blocks,
                      int pad_to_blocks) {
  auto out = open_out(path);
  out << "time_index,point_index,x,y,z\n";
  const Index m = blocks.points();
  for (int j = 0; j < pad_to_blocks; ++j) {
    for (Index i = 0; i < m; ++i) {
      if (j < blocks.blocks()) {
        const auto block = blocks.block(j);
        out << j << ',' << i << ',' << fmt(block(i, 0)) << ',' << fmt(block(i, 1)) << ','
            << fmt(block(i, 2)) << "\n";
      } else {
        out << j << ',' << i << ",0,0,0\n";
      }
    }
  }
}

}  // namespace

void write_result(const RegistrationResult& result, const std::filesystem::path& out_dir,
                  bool include_timings) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec && !std::filesystem::is_directory(out_dir))
    throw std::runtime_error("cannot create output directory '" + out_dir.string() + "'");

  write_blocks_csv(out_dir / "trajectory.csv", result.states, result.states.blocks());
  // the paper's control vector has n+1 blocks; the unused terminal block
  // is written as zeros
  write_blocks_csv(out_dir / "control.csv", result.control, result.control.blocks() + 1);

  {
    auto out = open_out(out_dir / "convergence.csv");
    out << "iter,hausdorff_censored,hausdorff_rel,primal_norm,primal_rel,dual_norm,"
           "dual_rel,t_kinetic_s,t_distance_s";
    const size_t frames = result.log.empty() ? 0 : result.log.front().frame_hausdorff.size();
    for (size_t f = 0; f < frames; ++f) out << ",hausdorff_frame_" << f + 1;
    out << "\n";
    const size_t ref_row = result.log.size() >= 2 ? 1 : 0;
    const double prim_ref = result.log.empty() ? 0.0 : result.log[ref_row].prim_norm;
    const double dual_ref = result.log.empty() ? 0.0 : result.log[ref_row].dual_norm;
    const double haus_ref = result.initial_hausdorff;
    for (const auto& rec : result.log) {
      out << rec.iter << ',' << fmt(rec.hausdorff) << ','
          << fmt(haus_ref > 0.0 ? rec.hausdorff / haus_ref : 0.0) << ','
          << fmt(rec.prim_norm) << ','
          << fmt(prim_ref > 0.0 ? rec.prim_norm / prim_ref : 0.0) << ','
          << fmt(rec.dual_norm) << ','
          << fmt(dual_ref > 0.0 ? rec.dual_norm / dual_ref : 0.0) << ','
          << fmt(include_timings ? rec.t_kinetic : 0.0) << ','
          << fmt(include_timings ? rec.t_distance : 0.0);
      for (const double value : rec.frame_hausdorff) out << ',' << fmt(value);
      out << "\n";
    }
  }

  if (result.strain) {
    auto out = open_out(out_dir / "strain.csv");
    out << "vertex_index,p_iso\n";
    for (Index i = 0; i < result.strain->per_vertex_p.size(); ++i)
      out << i << ',' << fmt(result.strain->per_vertex_p[i]) << "\n";
  }

  {
    json summary;
    summary["config"] = json::parse(config_to_json(result.config));
    summary["termination"] = result.termination;
    summary["iterations"] = result.log.size();
    summary["frames"] = result.frames;
    summary["frame_blocks"] = result.frame_blocks;
    summary["metrics"] = {
        {"initial_hausdorff", result.initial_hausdorff},
        {"final_hausdorff", result.final_hausdorff},
        {"final_hausdorff_rel", result.initial_hausdorff > 0.0
                                    ? result.final_hausdorff / result.initial_hausdorff
                                    : 0.0},
        {"kinetic_energy", result.kinetic_energy},
        {"frozen_faithful_gap", result.frozen_faithful_gap},
        {"final_primal_norm", result.log.empty() ? 0.0 : result.log.back().prim_norm},
        {"final_dual_norm", result.log.empty() ? 0.0 : result.log.back().dual_norm},
        {"eps_haus", result.eps_haus},
    };
    summary["runtime_s"] = include_timings ? result.runtime_s : 0.0;
    auto out = open_out(out_dir / "summary.json");
    out << summary.dump(2) << "\n";
  }
}

std::string config_to_json(const SolverConfig& cfg, int indent) {
  json j;
  j["n"] = cfg.n;
  j["alpha"] = cfg.alpha;
  j["rho"] = cfg.rho;
  j["tau_v"] = cfg.tau_v;
  j["tau_s"] = cfg.tau_s;
  j["eps_prim"] = cfg.eps_prim;
  j["eps_dual"] = cfg.eps_dual;
  j["tau_haus"] = cfg.tau_haus;
  j["n_iter"] = cfg.n_iter;
  j["hausdorff_percentile"] = cfg.hausdorff_percentile;
  j["kkt_pcg"] = {{"rel_tolerance", cfg.kkt_pcg.rel_tolerance},
                  {"max_iterations", cfg.kkt_pcg.max_iterations}};
  j["newton"] = {{"max_iterations", cfg.newton.max_iterations},
                 {"armijo_c", cfg.newton.armijo_c},
                 {"backtrack_factor", cfg.newton.backtrack_factor},
                 {"max_backtracks", cfg.newton.max_backtracks},
                 {"tau_pcg", cfg.newton.tau_pcg}};
  j["boundary_alpha_scale"] = cfg.boundary_alpha_scale;
  if (cfg.sigma_v) j["sigma_v"] = *cfg.sigma_v;
  if (cfg.sigma_s) j["sigma_s"] = *cfg.sigma_s;
  if (!cfg.sigma_s_frames.empty()) j["sigma_s_frames"] = cfg.sigma_s_frames;
  if (cfg.kinetic_scale) j["kinetic_scale"] = *cfg.kinetic_scale;
  j["seed"] = cfg.seed;
  j["stop_only_iter_cap"] = cfg.stop_only_iter_cap;
  return j.dump(indent);
}

SolverConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  SolverConfig cfg;
  if (j.contains("n")) cfg.n = j["n"];
  if (j.contains("alpha")) cfg.alpha = j["alpha"];
  if (j.contains("rho")) cfg.rho = j["rho"];
  if (j.contains("tau_v")) cfg.tau_v = j["tau_v"];
  if (j.contains("tau_s")) cfg.tau_s = j["tau_s"];
  if (j.contains("eps_prim")) cfg.eps_prim = j["eps_prim"];
  if (j.contains("eps_dual")) cfg.eps_dual = j["eps_dual"];
  if (j.contains("tau_haus")) cfg.tau_haus = j["tau_haus"];
  if (j.contains("n_iter")) cfg.n_iter = j["n_iter"];
  if (j.contains("hausdorff_percentile")) cfg.hausdorff_percentile = j["hausdorff_percentile"];
  if (j.contains("kkt_pcg")) {
    const auto& p = j["kkt_pcg"];
    if (p.contains("rel_tolerance")) cfg.kkt_pcg.rel_tolerance = p["rel_tolerance"];
    if (p.contains("max_iterations")) cfg.kkt_pcg.max_iterations = p["max_iterations"];
  }
  if (j.contains("newton")) {
    const auto& p = j["newton"];
    if (p.contains("max_iterations")) cfg.newton.max_iterations = p["max_iterations"];
    if (p.contains("armijo_c")) cfg.newton.armijo_c = p["armijo_c"];
    if (p.contains("backtrack_factor")) cfg.newton.backtrack_factor = p["backtrack_factor"];
    if (p.contains("max_backtracks")) cfg.newton.max_backtracks = p["max_backtracks"];
    if (p.contains("tau_pcg")) cfg.newton.tau_pcg = p["tau_pcg"];
  }
  if (j.contains("boundary_alpha_scale")) cfg.boundary_alpha_scale = j["boundary_alpha_scale"];
  if (j.contains("sigma_v")) cfg.sigma_v = j["sigma_v"].get<double>();
  if (j.contains("sigma_s")) cfg.sigma_s = j["sigma_s"].get<double>();
  if (j.contains("sigma_s_frames"))
    cfg.sigma_s_frames = j["sigma_s_frames"].get<std::vector<double>>();
  if (j.contains("kinetic_scale")) cfg.kinetic_scale = j["kinetic_scale"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"];
  if (j.contains("stop_only_iter_cap")) cfg.stop_only_iter_cap = j["stop_only_iter_cap"];
  validate(cfg);
  return cfg;
}

SolverConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return config_from_json(buffer.str());
  } catch (const std::exception& err) {
    throw std::runtime_error(path.string() + ": " + err.what());
  }
}

}  // namespace diffeoflow

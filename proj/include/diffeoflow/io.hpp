#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "diffeoflow/admm.hpp"
#include "diffeoflow/shape.hpp"

namespace diffeoflow {

enum class ShapeFormat { csv, obj };

/// Infers the format from the file extension (.csv / .obj).
ShapeFormat format_from_path(const std::filesystem::path& path);

/// CSV columns x,y,z[,leaflet][,boundary][,weight] with a one-line
/// header; OBJ subset with v and f records (1-based indices, polygons
/// fan-triangulated unless fan_polygons is false). Numbers round-trip
/// exactly (17 significant digits, '.' decimal separator, LF endings).
Shape read_shape(std::istream& in, ShapeFormat format, bool fan_polygons = true);
Shape read_shape(const std::filesystem::path& path, bool fan_polygons = true);

void write_shape(std::ostream& out, const Shape& shape, ShapeFormat format);
void write_shape(const std::filesystem::path& path, const Shape& shape);

/// Emits trajectory.csv, control.csv (padded to the paper's n+1 blocks),
/// convergence.csv, strain.csv (when a strain field is present) and
/// summary.json into out_dir. Wall-clock fields are written as 0 unless
/// include_timings is set, keeping outputs byte-stable across runs.
void write_result(const RegistrationResult& result, const std::filesystem::path& out_dir,
                  bool include_timings = false);

/// SolverConfig <-> JSON (the summary.json "config" object). Fields
/// absent from the JSON keep their defaults, so an echoed config replays
/// the exact run that produced it.
std::string config_to_json(const SolverConfig& cfg, int indent = 2);
SolverConfig config_from_json(const std::string& text);
SolverConfig read_config(const std::filesystem::path& path);

}  // namespace diffeoflow

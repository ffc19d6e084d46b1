// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: a JSON document with beam, field, task, numerics and
// output blocks, parsed into plain structs with every violation reported
// through ConfigError carrying the JSON path of the offending field. The
// parser is strict: unknown keys are rejected so typos cannot silently
// fall back to defaults.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace lenscope {

struct BeamConfig {
  std::string particle = "electron";
  double energy_ev = 0.0;   // kinetic energy, or eU for the voltage branch
  bool from_voltage = false;
};

enum class FieldKind { glaser, power_law, uniform, tabulated };

struct FieldConfig {
  FieldKind kind = FieldKind::glaser;
  double B0_tesla = 0.0;
  double a_mm = 0.0;             // glaser half-width
  double k_n = 0.0;              // power-law shape amplitude, 1/mm^n
  int n = 0;                     // power-law exponent
  bool negative_half = false;    // power-law domain z <= 0 instead of z >= 0
  std::string csv_path;          // tabulated samples, resolved absolute
  double z_scale = 1.0;          // file z unit in mm
  double B_scale = 1.0;          // file B unit in tesla
};

struct TraceTask {
  double z_start = 0.0, z_end = 0.0;
  int planes = 200;
  double initial[4] = {0.0, 0.0, 0.0, 0.0}; // x, y, px/p0, py/p0
};

struct CardinalTask {
  double z_ob = 0.0;
  double search_lo = 0.0, search_hi = 0.0;
  double z_min_gap = 0.0;
};

struct AberrationsTask {
  double z_ob = 0.0;
  bool have_z_im = false;
  double z_im = 0.0;
  double search_lo = 0.0, search_hi = 0.0;
  int planes = 200; // integrand samples for plot data
};

struct PropagateTask {
  double z_start = 0.0, z_end = 0.0;
  int nx = 0, ny = 0;
  double dx_mm = 0.0, dy_mm = 0.0;
  double x0_mm = 0.0, y0_mm = 0.0;
  bool source_from_file = false;
  std::string wavefield_path;    // resolved absolute
  double center_mm[2] = {0.0, 0.0};
  double sigma_mm = 0.0;
  double tilt[2] = {0.0, 0.0};
  double h_threshold_mm = 0.0;   // 0 asks for the automatic branch threshold
};

struct CrosscheckTask {
  double z_start = 0.0, z_end = 0.0;
  int planes = 200;
};

using TaskConfig = std::variant<TraceTask, CardinalTask, AberrationsTask,
                                PropagateTask, CrosscheckTask>;

struct NumericsConfig {
  double quad_tol = 1e-9;     // aberration quadratures, absolute
  double ode_rel_tol = 1e-10; // Runge-Kutta route
  double image_tol = 1e-12;   // image-plane root refinement, mm
  double route_tol = 1e-7;    // crosscheck agreement gate
  int peano_baker_order = 6;
  int peano_baker_segments = 64;
  int peano_baker_steps = 64;
};

struct OutputConfig {
  std::string directory;
  bool plot_data = true;
};

struct RunConfig {
  BeamConfig beam;
  FieldConfig field;
  TaskConfig task;
  NumericsConfig numerics;
  OutputConfig output;
  std::string raw_text; // exact file bytes, hashed into every summary

  const char* task_name() const {
    static constexpr const char* names[] = {"trace", "cardinal",
                                            "aberrations", "propagate",
                                            "crosscheck"};
    return names[task.index()];
  }
};

namespace detail {

using config_json = nlohmann::json;

inline std::string join_path(const std::string& base, const char* key) {
  return base.empty() ? std::string(key) : base + "." + key;
}

inline void require_keys_known(const config_json& obj, const std::string& path,
                               std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(join_path(path, it.key().c_str()),
                               "unknown field");
  }
}

inline const config_json& require_object(const config_json& parent,
                                         const std::string& base,
                                         const char* key) {
  const std::string path = join_path(base, key);
  auto it = parent.find(key);
  if (it == parent.end()) throw ConfigError(path, "missing required block");
  if (!it->is_object()) throw ConfigError(path, "must be an object");
  return *it;
}

inline const config_json* find_member(const config_json& parent,
                                      const char* key) {
  auto it = parent.find(key);
  return it == parent.end() ? nullptr : &*it;
}

inline double number_field(const config_json& parent, const std::string& base,
                           const char* key, bool required,
                           double fallback = 0.0) {
  const std::string path = join_path(base, key);
  const config_json* v = find_member(parent, key);
  if (!v) {
    if (required) throw ConfigError(path, "missing required number");
    return fallback;
  }
  if (!v->is_number()) throw ConfigError(path, "must be a number");
  const double x = v->get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline double positive_field(const config_json& parent,
                             const std::string& base, const char* key,
                             bool required, double fallback = 0.0) {
  const double x = number_field(parent, base, key, required, fallback);
  if (!(x > 0.0))
    throw ConfigError(join_path(base, key), "must be positive");
  return x;
}

inline int int_field(const config_json& parent, const std::string& base,
                     const char* key, bool required, int fallback, int lo,
                     int hi) {
  const std::string path = join_path(base, key);
  const config_json* v = find_member(parent, key);
  if (!v) {
    if (required) throw ConfigError(path, "missing required integer");
    return fallback;
  }
  if (!v->is_number_integer()) throw ConfigError(path, "must be an integer");
  const long long x = v->get<long long>();
  if (x < lo || x > hi)
    throw ConfigError(path, "must be between " + std::to_string(lo) +
                                " and " + std::to_string(hi));
  return static_cast<int>(x);
}

inline bool bool_field(const config_json& parent, const std::string& base,
                       const char* key, bool fallback) {
  const config_json* v = find_member(parent, key);
  if (!v) return fallback;
  if (!v->is_boolean())
    throw ConfigError(join_path(base, key), "must be true or false");
  return v->get<bool>();
}

inline std::string string_field(const config_json& parent,
                                const std::string& base, const char* key,
                                bool required,
                                const std::string& fallback = "") {
  const std::string path = join_path(base, key);
  const config_json* v = find_member(parent, key);
  if (!v) {
    if (required) throw ConfigError(path, "missing required string");
    return fallback;
  }
  if (!v->is_string() || v->get<std::string>().empty())
    throw ConfigError(path, "must be a non-empty string");
  return v->get<std::string>();
}

inline void pair_field(const config_json& parent, const std::string& base,
                       const char* key, double out[2], bool required) {
  const std::string path = join_path(base, key);
  const config_json* v = find_member(parent, key);
  if (!v) {
    if (required) throw ConfigError(path, "missing required pair");
    return;
  }
  if (!v->is_array() || v->size() != 2)
    throw ConfigError(path, "must be an array of two numbers");
  for (int i = 0; i < 2; ++i) {
    const config_json& e = (*v)[i];
    if (!e.is_number() || !std::isfinite(e.get<double>()))
      throw ConfigError(path + "[" + std::to_string(i) + "]",
                        "must be a finite number");
    out[i] = e.get<double>();
  }
}

/// Resolve a configured path against the config file's directory and
/// require the file to exist, so broken references surface at parse time
/// instead of deep inside a run.
inline std::string resolve_existing_file(const std::string& value,
                                         const std::filesystem::path& base_dir,
                                         const std::string& path) {
  namespace fs = std::filesystem;
  fs::path p(value);
  if (p.is_relative()) p = base_dir / p;
  std::error_code ec;
  if (!fs::exists(p, ec) || fs::is_directory(p, ec))
    throw ConfigError(path, "referenced file does not exist: " + p.string());
  return p.lexically_normal().string();
}

inline BeamConfig parse_beam(const config_json& root) {
  const config_json& b = require_object(root, "", "beam");
  require_keys_known(b, "beam", {"particle", "kinetic_energy_ev",
                                 "voltage_v"});
  BeamConfig out;
  out.particle = string_field(b, "beam", "particle", false, "electron");
  if (out.particle != "electron")
    throw ConfigError("beam.particle",
                      "only 'electron' is supported, got '" + out.particle +
                          "'");
  const bool has_T = find_member(b, "kinetic_energy_ev") != nullptr;
  const bool has_U = find_member(b, "voltage_v") != nullptr;
  if (has_T == has_U)
    throw ConfigError("beam",
                      "exactly one of kinetic_energy_ev or voltage_v is "
                      "required");
  out.from_voltage = has_U;
  out.energy_ev = positive_field(
      b, "beam", has_U ? "voltage_v" : "kinetic_energy_ev", true);
  return out;
}

inline FieldConfig parse_field(const config_json& root,
                               const std::filesystem::path& base_dir) {
  const config_json& f = require_object(root, "", "field");
  FieldConfig out;
  const std::string model = string_field(f, "field", "model", true);
  if (model == "glaser") {
    out.kind = FieldKind::glaser;
    require_keys_known(f, "field", {"model", "B0_tesla", "a_mm"});
    out.B0_tesla = number_field(f, "field", "B0_tesla", true);
    if (out.B0_tesla == 0.0)
      throw ConfigError("field.B0_tesla", "must be non-zero");
    out.a_mm = positive_field(f, "field", "a_mm", true);
  } else if (model == "uniform") {
    out.kind = FieldKind::uniform;
    require_keys_known(f, "field", {"model", "B0_tesla"});
    out.B0_tesla = number_field(f, "field", "B0_tesla", true);
  } else if (model == "power_law") {
    out.kind = FieldKind::power_law;
    require_keys_known(f, "field", {"model", "B0_tesla", "k_n", "n", "half"});
    out.B0_tesla = number_field(f, "field", "B0_tesla", true);
    if (out.B0_tesla == 0.0)
      throw ConfigError("field.B0_tesla", "must be non-zero");
    out.k_n = number_field(f, "field", "k_n", true);
    if (out.k_n == 0.0) throw ConfigError("field.k_n", "must be non-zero");
    out.n = int_field(f, "field", "n", true, 0, -64, 64);
    if (out.n == 0 || out.n == -1)
      throw ConfigError("field.n",
                        "exponent 0 and -1 are outside the model family");
    const std::string half =
        string_field(f, "field", "half", false, "positive");
    if (half == "positive")
      out.negative_half = false;
    else if (half == "negative")
      out.negative_half = true;
    else
      throw ConfigError("field.half", "must be 'positive' or 'negative'");
  } else if (model == "tabulated") {
    out.kind = FieldKind::tabulated;
    require_keys_known(f, "field",
                       {"model", "csv_path", "z_scale", "B_scale"});
    out.csv_path = resolve_existing_file(
        string_field(f, "field", "csv_path", true), base_dir,
        "field.csv_path");
    out.z_scale = positive_field(f, "field", "z_scale", false, 1.0);
    out.B_scale = number_field(f, "field", "B_scale", false, 1.0);
    if (out.B_scale == 0.0)
      throw ConfigError("field.B_scale", "must be non-zero");
  } else {
    throw ConfigError("field.model",
                      "must be one of glaser, power_law, uniform, tabulated");
  }
  return out;
}

inline void parse_span(const config_json& t, const std::string& base,
                       double& z_start, double& z_end) {
  z_start = number_field(t, base, "z_start_mm", true);
  z_end = number_field(t, base, "z_end_mm", true);
  if (z_end == z_start)
    throw ConfigError(join_path(base, "z_end_mm"),
                      "must differ from z_start_mm");
}

inline TraceTask parse_trace(const config_json& t) {
  const std::string base = "task.trace";
  require_keys_known(t, base, {"z_start_mm", "z_end_mm", "planes",
                               "initial"});
  TraceTask out;
  parse_span(t, base, out.z_start, out.z_end);
  out.planes = int_field(t, base, "planes", false, 200, 2, 1000000);
  const config_json& ini = require_object(t, base, "initial");
  const std::string ip = base + ".initial";
  require_keys_known(ini, ip, {"x_mm", "y_mm", "px_over_p0", "py_over_p0"});
  out.initial[0] = number_field(ini, ip, "x_mm", false, 0.0);
  out.initial[1] = number_field(ini, ip, "y_mm", false, 0.0);
  out.initial[2] = number_field(ini, ip, "px_over_p0", false, 0.0);
  out.initial[3] = number_field(ini, ip, "py_over_p0", false, 0.0);
  return out;
}

inline CardinalTask parse_cardinal(const config_json& t) {
  const std::string base = "task.cardinal";
  require_keys_known(t, base, {"z_ob_mm", "search_mm", "z_min_gap_mm"});
  CardinalTask out;
  out.z_ob = number_field(t, base, "z_ob_mm", true);
  double search[2] = {0.0, 0.0};
  pair_field(t, base, "search_mm", search, true);
  if (!(search[1] > search[0]))
    throw ConfigError(join_path(base, "search_mm"),
                      "bracket must satisfy search_mm[0] < search_mm[1]");
  out.search_lo = search[0];
  out.search_hi = search[1];
  out.z_min_gap = number_field(t, base, "z_min_gap_mm", false, 0.0);
  if (out.z_min_gap < 0.0)
    throw ConfigError(join_path(base, "z_min_gap_mm"),
                      "must be non-negative");
  return out;
}

inline AberrationsTask parse_aberrations(const config_json& t) {
  const std::string base = "task.aberrations";
  require_keys_known(t, base, {"z_ob_mm", "z_im_mm", "search_mm", "planes"});
  AberrationsTask out;
  out.z_ob = number_field(t, base, "z_ob_mm", true);
  const bool has_im = find_member(t, "z_im_mm") != nullptr;
  const bool has_search = find_member(t, "search_mm") != nullptr;
  if (has_im == has_search)
    throw ConfigError(base,
                      "exactly one of z_im_mm or search_mm is required");
  if (has_im) {
    out.have_z_im = true;
    out.z_im = number_field(t, base, "z_im_mm", true);
    if (!(out.z_im > out.z_ob))
      throw ConfigError(join_path(base, "z_im_mm"),
                        "must lie downstream of z_ob_mm");
  } else {
    double search[2] = {0.0, 0.0};
    pair_field(t, base, "search_mm", search, true);
    if (!(search[1] > search[0]))
      throw ConfigError(join_path(base, "search_mm"),
                        "bracket must satisfy search_mm[0] < search_mm[1]");
    out.search_lo = search[0];
    out.search_hi = search[1];
  }
  out.planes = int_field(t, base, "planes", false, 200, 2, 1000000);
  return out;
}

inline bool is_pow2_int(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline PropagateTask parse_propagate(const config_json& t,
                                     const std::filesystem::path& base_dir) {
  const std::string base = "task.propagate";
  require_keys_known(t, base, {"z_start_mm", "z_end_mm", "grid", "source",
                               "h_threshold_mm"});
  PropagateTask out;
  parse_span(t, base, out.z_start, out.z_end);

  const config_json& g = require_object(t, base, "grid");
  const std::string gp = base + ".grid";
  require_keys_known(g, gp, {"nx", "ny", "dx_mm", "dy_mm", "x0_mm",
                             "y0_mm"});
  out.nx = int_field(g, gp, "nx", true, 0, 1, 1 << 20);
  out.ny = int_field(g, gp, "ny", true, 0, 1, 1 << 20);
  if (!is_pow2_int(out.nx) || out.nx < 64)
    throw ConfigError(gp + ".nx", "must be a power of two, at least 64");
  if (!is_pow2_int(out.ny) || out.ny < 64)
    throw ConfigError(gp + ".ny", "must be a power of two, at least 64");
  out.dx_mm = positive_field(g, gp, "dx_mm", true);
  out.dy_mm = positive_field(g, gp, "dy_mm", true);
  out.x0_mm = number_field(g, gp, "x0_mm", false, 0.0);
  out.y0_mm = number_field(g, gp, "y0_mm", false, 0.0);

  const config_json& s = require_object(t, base, "source");
  const std::string sp = base + ".source";
  require_keys_known(s, sp, {"gaussian", "wavefield_path"});
  const bool has_gauss = find_member(s, "gaussian") != nullptr;
  const bool has_file = find_member(s, "wavefield_path") != nullptr;
  if (has_gauss == has_file)
    throw ConfigError(sp,
                      "exactly one of gaussian or wavefield_path is "
                      "required");
  if (has_file) {
    out.source_from_file = true;
    out.wavefield_path = resolve_existing_file(
        string_field(s, sp, "wavefield_path", true), base_dir,
        sp + ".wavefield_path");
  } else {
    const config_json& gs = require_object(s, sp, "gaussian");
    const std::string gsp = sp + ".gaussian";
    require_keys_known(gs, gsp, {"center_mm", "sigma_mm", "tilt"});
    pair_field(gs, gsp, "center_mm", out.center_mm, false);
    out.sigma_mm = positive_field(gs, gsp, "sigma_mm", true);
    pair_field(gs, gsp, "tilt", out.tilt, false);
    if (out.tilt[0] * out.tilt[0] + out.tilt[1] * out.tilt[1] >= 1.0)
      throw ConfigError(gsp + ".tilt", "slope magnitude must stay below 1");
  }

  out.h_threshold_mm = number_field(t, base, "h_threshold_mm", false, 0.0);
  if (out.h_threshold_mm < 0.0)
    throw ConfigError(join_path(base, "h_threshold_mm"),
                      "must be non-negative (0 selects the automatic "
                      "threshold)");
  return out;
}

inline CrosscheckTask parse_crosscheck(const config_json& t) {
  const std::string base = "task.crosscheck";
  require_keys_known(t, base, {"z_start_mm", "z_end_mm", "planes"});
  CrosscheckTask out;
  parse_span(t, base, out.z_start, out.z_end);
  out.planes = int_field(t, base, "planes", false, 200, 2, 1000000);
  return out;
}

inline TaskConfig parse_task(const config_json& root,
                             const std::filesystem::path& base_dir) {
  const config_json& t = require_object(root, "", "task");
  require_keys_known(t, "task", {"trace", "cardinal", "aberrations",
                                 "propagate", "crosscheck"});
  if (t.size() != 1)
    throw ConfigError("task",
                      "exactly one task block is required, found " +
                          std::to_string(t.size()));
  const std::string name = t.begin().key();
  const config_json& body = require_object(t, "task", name.c_str());
  if (name == "trace") return parse_trace(body);
  if (name == "cardinal") return parse_cardinal(body);
  if (name == "aberrations") return parse_aberrations(body);
  if (name == "propagate") return parse_propagate(body, base_dir);
  return parse_crosscheck(body);
}

inline NumericsConfig parse_numerics(const config_json& root) {
  NumericsConfig out;
  const config_json* n = find_member(root, "numerics");
  if (!n) return out;
  if (!n->is_object()) throw ConfigError("numerics", "must be an object");
  require_keys_known(*n, "numerics",
                     {"quad_tol", "ode_rel_tol", "image_tol", "route_tol",
                      "peano_baker_order", "peano_baker_segments",
                      "peano_baker_steps"});
  out.quad_tol = positive_field(*n, "numerics", "quad_tol", false, out.quad_tol);
  out.ode_rel_tol =
      positive_field(*n, "numerics", "ode_rel_tol", false, out.ode_rel_tol);
  out.image_tol =
      positive_field(*n, "numerics", "image_tol", false, out.image_tol);
  out.route_tol =
      positive_field(*n, "numerics", "route_tol", false, out.route_tol);
  out.peano_baker_order = int_field(*n, "numerics", "peano_baker_order",
                                    false, out.peano_baker_order, 1, 16);
  out.peano_baker_segments =
      int_field(*n, "numerics", "peano_baker_segments", false,
                out.peano_baker_segments, 1, 100000);
  out.peano_baker_steps = int_field(*n, "numerics", "peano_baker_steps",
                                    false, out.peano_baker_steps, 2, 100000);
  return out;
}

inline OutputConfig parse_output(const config_json& root) {
  const config_json& o = require_object(root, "", "output");
  require_keys_known(o, "output", {"directory", "plot_data"});
  OutputConfig out;
  out.directory = string_field(o, "output", "directory", true);
  out.plot_data = bool_field(o, "output", "plot_data", true);
  return out;
}

} // namespace detail

/// Parse a configuration document. base_dir anchors relative file
/// references (tabulated field samples, wavefield sources).
inline RunConfig parse_run_config_text(const std::string& text,
                                       const std::filesystem::path& base_dir) {
  using detail::config_json;
  config_json root;
  try {
    root = config_json::parse(text);
  } catch (const config_json::parse_error& e) {
    throw ConfigError("$", std::string("not valid JSON: ") + e.what());
  }
  if (!root.is_object())
    throw ConfigError("$", "top level must be a JSON object");
  detail::require_keys_known(root, "",
                             {"beam", "field", "task", "numerics", "output"});

  RunConfig cfg;
  cfg.raw_text = text;
  cfg.beam = detail::parse_beam(root);
  cfg.field = detail::parse_field(root, base_dir);
  cfg.task = detail::parse_task(root, base_dir);
  cfg.numerics = detail::parse_numerics(root);
  cfg.output = detail::parse_output(root);
  return cfg;
}

/// Parse a configuration file from disk.
inline RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(
      buf.str(), std::filesystem::path(path).parent_path());
}

} // namespace lenscope

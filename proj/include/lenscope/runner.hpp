// SPDX-License-Identifier: Apache-2.0
//
// Run orchestration: build beam and field from a parsed configuration,
// execute the requested task, and leave a deterministic trail in the
// output directory. Every run writes summary.json; plot-oriented CSV
// series and binary wavefields accompany it when plot_data is on.
//
// The summary serializer fixes floating formatting to 17 significant
// digits and preserves insertion order, so identical configurations
// produce byte-identical files. Each summary embeds the library version
// and an FNV-1a hash of the exact configuration bytes it came from.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "aberration.hpp"
#include "beam.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "paraxial.hpp"
#include "version.hpp"
#include "wavefield.hpp"

namespace lenscope {

/// Command-line adjustments applied on top of the configuration file.
struct RunOverrides {
  std::string subcommand;        // must match the config task when set
  std::string out_dir;           // replaces output.directory when set
  std::optional<double> tol;     // replaces quad_tol and route_tol
  std::optional<unsigned> seed;  // jitters crosscheck sample planes
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Serialize with insertion order kept and doubles at 17 significant
/// digits, the one place the library commits to a byte-stable format.
inline void append_summary(const nlohmann::ordered_json& j, int level,
                           std::string& out) {
  const std::string pad(2 * (level + 1), ' ');
  const std::string close_pad(2 * level, ' ');
  switch (j.type()) {
  case nlohmann::ordered_json::value_t::object: {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      out += nlohmann::ordered_json(it.key()).dump();
      out += ": ";
      append_summary(it.value(), level + 1, out);
    }
    out += "\n" + close_pad + "}";
    return;
  }
  case nlohmann::ordered_json::value_t::array: {
    if (j.empty()) {
      out += "[]";
      return;
    }
    out += "[\n";
    bool first = true;
    for (const auto& e : j) {
      if (!first) out += ",\n";
      first = false;
      out += pad;
      append_summary(e, level + 1, out);
    }
    out += "\n" + close_pad + "]";
    return;
  }
  case nlohmann::ordered_json::value_t::number_float: {
    const double x = j.get<double>();
    out += std::isfinite(x) ? fmt17(x) : "null";
    return;
  }
  default:
    out += j.dump();
    return;
  }
}

inline std::string dump_summary(const nlohmann::ordered_json& j) {
  std::string out;
  append_summary(j, 0, out);
  out += "\n";
  return out;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  return f;
}

inline void write_text(const std::filesystem::path& p,
                       const std::string& text) {
  std::ofstream f = open_out(p);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("short write to " + p.string());
}

inline int thread_cap_from_env() {
  const char* v = std::getenv("LENSCOPE_THREADS");
  if (!v) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<int>(std::min<long>(n, 1024));
}

inline BeamKinematics build_beam(const BeamConfig& b) {
  return b.from_voltage
             ? BeamKinematics::from_potential_nonrelativistic(b.energy_ev)
             : BeamKinematics::from_kinetic_energy(b.energy_ev);
}

inline FieldProfile build_field(const FieldConfig& f) {
  switch (f.kind) {
  case FieldKind::glaser:
    return FieldProfile::glaser(f.B0_tesla, f.a_mm);
  case FieldKind::uniform:
    return FieldProfile::uniform(f.B0_tesla);
  case FieldKind::power_law:
    return FieldProfile::power_law(f.B0_tesla, f.k_n, f.n,
                                   f.negative_half ? HalfLine::negative
                                                   : HalfLine::positive);
  default:
    return FieldProfile::tabulated_from_csv(f.csv_path, f.z_scale,
                                            f.B_scale);
  }
}

inline nlohmann::ordered_json pair_json(const FundamentalPair& p) {
  nlohmann::ordered_json j;
  j["g"] = p.g;
  j["g_prime"] = p.g_prime;
  j["h"] = p.h;
  j["h_prime"] = p.h_prime;
  return j;
}

inline double pair_spread(const FundamentalPair& a, const FundamentalPair& b) {
  return std::max({std::abs(a.g - b.g), std::abs(a.g_prime - b.g_prime),
                   std::abs(a.h - b.h), std::abs(a.h_prime - b.h_prime)});
}

/// Fundamental-pair evaluator for many planes from a fixed origin: the
/// closed form where the model has one, otherwise a single dense ODE
/// interpolant instead of one integration per plane.
class PairScan {
public:
  PairScan(const LensStrength& ls, double zi, double z_lo, double z_hi)
      : ls_(&ls), zi_(zi) {
    if (!closed_pair_route(ls, zi, std::min(zi, z_lo)))
      dense_.emplace(ls, zi, std::min(zi, z_lo), std::max(zi, z_hi));
  }

  FundamentalPair at(double z) const {
    return dense_ ? dense_->at(z) : pair_between(*ls_, zi_, z);
  }

  bool closed() const { return !dense_.has_value(); }

private:
  const LensStrength* ls_;
  double zi_;
  std::optional<PairInterpolant> dense_;
};

inline std::vector<double> uniform_samples(double lo, double hi, int n) {
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    z[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return z;
}

// ---------------------------------------------------------------- trace

inline nlohmann::ordered_json run_trace(const LensStrength& ls,
                                        const TraceTask& t,
                                        const std::filesystem::path& out_dir,
                                        bool plot_data) {
  const std::vector<double> z = uniform_samples(t.z_start, t.z_end, t.planes);
  CentroidState s0;
  s0.x = t.initial[0];
  s0.y = t.initial[1];
  s0.px_over_p0 = t.initial[2];
  s0.py_over_p0 = t.initial[3];
  const auto path = trace_centroid(ls, s0, t.z_start, z);

  if (plot_data) {
    std::ofstream csv = open_out(out_dir / "trajectory.csv");
    csv << "z_mm,x_mm,y_mm,px_over_p0,py_over_p0\n";
    for (const auto& [zk, sk] : path)
      csv << fmt17(zk) << ',' << fmt17(sk.x) << ',' << fmt17(sk.y) << ','
          << fmt17(sk.px_over_p0) << ',' << fmt17(sk.py_over_p0) << '\n';
    if (!csv) throw IoError("short write to trajectory.csv");
  }

  const FundamentalPair p = pair_between(ls, t.z_start, t.z_end);
  const CentroidState sf = path.back().second;

  nlohmann::ordered_json r;
  r["z_start_mm"] = t.z_start;
  r["z_end_mm"] = t.z_end;
  r["planes"] = t.planes;
  r["initial"] = {{"x_mm", s0.x},
                  {"y_mm", s0.y},
                  {"px_over_p0", s0.px_over_p0},
                  {"py_over_p0", s0.py_over_p0}};
  r["final"] = {{"x_mm", sf.x},
                {"y_mm", sf.y},
                {"px_over_p0", sf.px_over_p0},
                {"py_over_p0", sf.py_over_p0}};
  r["larmor_angle_rad"] = larmor_angle(ls, t.z_start, t.z_end);
  r["pair"] = pair_json(p);
  r["wronskian_minus_1"] = wronskian(p) - 1.0;
  return r;
}

// -------------------------------------------------------------- cardinal

inline nlohmann::ordered_json run_cardinal(const LensStrength& ls,
                                           const CardinalTask& t,
                                           const NumericsConfig& num,
                                           const std::filesystem::path& out_dir,
                                           bool plot_data) {
  const double z_im = find_image_plane(
      ls, t.z_ob, {t.search_lo, t.search_hi}, num.image_tol, t.z_min_gap);
  const CardinalElements ce = cardinal_elements(ls, t.z_ob, z_im);

  const FundamentalPair primary = pair_between(ls, t.z_ob, z_im);
  const FundamentalPair ode = ode_pair(ls, t.z_ob, z_im, num.ode_rel_tol);
  const FundamentalPair pb = peano_baker_composed(
      ls, t.z_ob, z_im, num.peano_baker_order, num.peano_baker_segments,
      num.peano_baker_steps);

  if (plot_data) {
    const PairScan scan(ls, t.z_ob, t.search_lo, t.search_hi);
    std::ofstream csv = open_out(out_dir / "root_scan.csv");
    csv << "z_mm,h_mm\n";
    for (double z : uniform_samples(t.search_lo, t.search_hi, 513))
      csv << fmt17(z) << ',' << fmt17(scan.at(z).h) << '\n';
    if (!csv) throw IoError("short write to root_scan.csv");
  }

  nlohmann::ordered_json r;
  r["z_ob_mm"] = t.z_ob;
  r["z_im_mm"] = z_im;
  r["magnification"] = ce.M;
  r["focal_length_mm"] = ce.f;
  r["image_rotation_rad"] = ce.theta_im;
  r["h_at_image_mm"] = primary.h;
  r["M_times_h_prime_plus_1"] = ce.M * primary.h_prime + 1.0;
  r["routes"] = {{"primary", pair_json(primary)},
                 {"ode", pair_json(ode)},
                 {"peano_baker", pair_json(pb)}};
  r["route_spread"] = {{"ode_vs_primary", pair_spread(ode, primary)},
                       {"peano_baker_vs_primary",
                        pair_spread(pb, primary)}};
  return r;
}

// ----------------------------------------------------------- aberrations

inline nlohmann::ordered_json run_aberrations(
    const LensStrength& ls, const AberrationsTask& t,
    const NumericsConfig& num, const std::filesystem::path& out_dir,
    bool plot_data) {
  const double z_im =
      t.have_z_im ? t.z_im
                  : find_image_plane(ls, t.z_ob,
                                     {t.search_lo, t.search_hi},
                                     num.image_tol);
  const CardinalElements ce = cardinal_elements(ls, t.z_ob, z_im);
  const AberrationSet ab =
      aberration_coefficients(ls, t.z_ob, z_im, num.quad_tol);
  const double c_scherzer = scherzer_C(ls, t.z_ob, z_im, num.quad_tol);
  const double c_hawkes = hawkes_C(ls, t.z_ob, z_im, num.quad_tol);

  if (plot_data) {
    const auto samples =
        aberration_integrand_samples(ls, t.z_ob, z_im, t.planes,
                                     num.quad_tol);
    static constexpr const char* names[9] = {"C", "K",     "k_rot",
                                             "A", "a_rot", "F",
                                             "D", "d_rot", "E"};
    for (int c = 0; c < 9; ++c) {
      std::ofstream csv =
          open_out(out_dir / ("integrand_" + std::string(names[c]) +
                              ".csv"));
      csv << "z_mm,integrand\n";
      for (const auto& [z, row] : samples)
        csv << fmt17(z) << ',' << fmt17(row[static_cast<std::size_t>(c)])
            << '\n';
      if (!csv) throw IoError("short write to integrand CSV");
    }
  }

  const double spread = std::max({std::abs(ab.C - c_scherzer),
                                  std::abs(ab.C - c_hawkes),
                                  std::abs(c_scherzer - c_hawkes)});

  nlohmann::ordered_json r;
  r["z_ob_mm"] = t.z_ob;
  r["z_im_mm"] = z_im;
  r["magnification"] = ce.M;
  r["focal_length_mm"] = ce.f;
  r["image_rotation_rad"] = ce.theta_im;
  r["coefficients"] = {{"C", ab.C}, {"K", ab.K}, {"k", ab.k},
                       {"A", ab.A}, {"a", ab.a_coef}, {"F", ab.F},
                       {"D", ab.D}, {"d", ab.d}, {"E", ab.E}};
  r["spherical_forms"] = {{"quadrature", ab.C},
                          {"scherzer", c_scherzer},
                          {"hawkes", c_hawkes},
                          {"max_spread", spread}};
  return r;
}

// ------------------------------------------------------------- propagate

struct FieldStats {
  double norm2 = 0.0, cx = 0.0, cy = 0.0, sx = 0.0, sy = 0.0;
};

inline FieldStats field_stats(const WaveField& w) {
  double W = 0.0, mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0;
  for (std::size_t iy = 0; iy < w.ny; ++iy) {
    const double y = w.y_at(iy);
    for (std::size_t ix = 0; ix < w.nx; ++ix) {
      const double I = std::norm(w.values[iy * w.nx + ix]);
      const double x = w.x_at(ix);
      W += I;
      mx += I * x;
      my += I * y;
      mxx += I * x * x;
      myy += I * y * y;
    }
  }
  FieldStats s;
  s.norm2 = W * w.dx * w.dy;
  if (W > 0.0) {
    s.cx = mx / W;
    s.cy = my / W;
    s.sx = std::sqrt(std::max(0.0, mxx / W - s.cx * s.cx));
    s.sy = std::sqrt(std::max(0.0, myy / W - s.cy * s.cy));
  }
  return s;
}

inline void write_center_slice(const WaveField& w,
                               const std::filesystem::path& path) {
  std::ofstream csv = open_out(path);
  csv << "x_mm,intensity\n";
  const std::size_t iy = w.ny / 2;
  for (std::size_t ix = 0; ix < w.nx; ++ix)
    csv << fmt17(w.x_at(ix)) << ','
        << fmt17(std::norm(w.values[iy * w.nx + ix])) << '\n';
  if (!csv) throw IoError("short write to " + path.string());
}

inline nlohmann::ordered_json grid_json(const WaveField& w) {
  nlohmann::ordered_json j;
  j["nx"] = w.nx;
  j["ny"] = w.ny;
  j["dx_mm"] = w.dx;
  j["dy_mm"] = w.dy;
  j["x0_mm"] = w.x0;
  j["y0_mm"] = w.y0;
  j["z_mm"] = w.z;
  return j;
}

inline nlohmann::ordered_json run_propagate(
    const LensStrength& ls, const PropagateTask& t,
    const std::filesystem::path& out_dir, bool plot_data) {
  WaveField psi;
  if (t.source_from_file) {
    psi = read_wfld(t.wavefield_path, ls.beam());
    if (std::abs(psi.z - t.z_start) >
        1e-9 * std::max(1.0, std::abs(t.z_start)))
      throw ConfigError("task.propagate.z_start_mm",
                        "wavefield file holds the plane z = " +
                            std::to_string(psi.z) +
                            " mm, not the configured start");
  } else {
    GridSpec grid;
    grid.nx = static_cast<std::size_t>(t.nx);
    grid.ny = static_cast<std::size_t>(t.ny);
    grid.dx = t.dx_mm;
    grid.dy = t.dy_mm;
    grid.x0 = t.x0_mm;
    grid.y0 = t.y0_mm;
    psi = make_gaussian(grid, ls.beam(), t.z_start,
                        {t.center_mm[0], t.center_mm[1]}, t.sigma_mm,
                        {t.tilt[0], t.tilt[1]});
  }

  const PropagationPlan plan = make_propagation_plan(
      ls, t.z_start, t.z_end, psi, t.h_threshold_mm);
  const WaveField out = plan.branch == PropagationBranch::image_plane
                            ? propagate_to_image(psi, plan)
                            : propagate(psi, plan);

  write_wfld(psi, (out_dir / "input.wfld").string());
  write_wfld(out, (out_dir / "output.wfld").string());
  if (plot_data) {
    write_intensity_csv(psi, (out_dir / "input_intensity.csv").string());
    write_intensity_csv(out, (out_dir / "output_intensity.csv").string());
    write_center_slice(psi, out_dir / "input_slice.csv");
    write_center_slice(out, out_dir / "output_slice.csv");
  }

  const FieldStats si = field_stats(psi);
  const FieldStats so = field_stats(out);

  nlohmann::ordered_json r;
  r["branch"] = plan.branch == PropagationBranch::image_plane
                    ? "image_plane"
                    : "general";
  r["z_start_mm"] = plan.zi;
  r["z_end_mm"] = plan.z;
  r["larmor_angle_rad"] = plan.theta;
  r["pair"] = pair_json(plan.pair);
  r["h_threshold_mm"] = plan.h_threshold;
  r["input"] = {{"grid", grid_json(psi)},
                {"norm_squared", si.norm2},
                {"centroid_mm", {si.cx, si.cy}},
                {"sigma_mm", {si.sx, si.sy}}};
  r["output"] = {{"grid", grid_json(out)},
                 {"norm_squared", so.norm2},
                 {"centroid_mm", {so.cx, so.cy}},
                 {"sigma_mm", {so.sx, so.sy}},
                 {"global_phase_rad", out.global_phase}};
  r["norm_drift"] = so.norm2 - si.norm2;
  return r;
}

// ------------------------------------------------------------ crosscheck

inline nlohmann::ordered_json run_crosscheck(
    const LensStrength& ls, const CrosscheckTask& t,
    const NumericsConfig& num, const std::optional<unsigned>& seed,
    const std::filesystem::path& out_dir, bool plot_data,
    std::string& defer_error) {
  std::vector<double> z = uniform_samples(t.z_start, t.z_end, t.planes);
  if (seed) {
    // Jitter interior planes so repeated runs with different seeds sweep
    // the interval instead of retesting the same grid.
    std::mt19937 gen(*seed);
    std::uniform_real_distribution<double> u(-0.45, 0.45);
    const double step = (t.z_end - t.z_start) / (t.planes - 1);
    for (std::size_t i = 1; i + 1 < z.size(); ++i) z[i] += u(gen) * step;
  }

  const PairScan scan(ls, t.z_start, std::min(t.z_start, t.z_end),
                      std::max(t.z_start, t.z_end));

  double max_dg_ode = 0.0, max_dh_ode = 0.0;
  double max_dg_pb = 0.0, max_dh_pb = 0.0;
  double max_wronskian = 0.0;
  std::ofstream csv;
  if (plot_data) {
    csv = open_out(out_dir / "routes.csv");
    csv << "z_mm,g_primary,h_primary,g_ode,h_ode,g_pb,h_pb\n";
  }
  for (double zk : z) {
    FundamentalPair primary, ode, pb;
    if (zk != t.z_start) {
      primary = scan.at(zk);
      ode = ode_pair(ls, t.z_start, zk, num.ode_rel_tol);
      pb = peano_baker_composed(ls, t.z_start, zk, num.peano_baker_order,
                                num.peano_baker_segments,
                                num.peano_baker_steps);
    } else {
      primary.zi = ode.zi = pb.zi = t.z_start;
      primary.z = ode.z = pb.z = zk;
    }
    max_dg_ode = std::max(max_dg_ode, std::abs(ode.g - primary.g));
    max_dh_ode = std::max(max_dh_ode, std::abs(ode.h - primary.h));
    max_dg_pb = std::max(max_dg_pb, std::abs(pb.g - primary.g));
    max_dh_pb = std::max(max_dh_pb, std::abs(pb.h - primary.h));
    for (const FundamentalPair& p : {primary, ode, pb})
      max_wronskian = std::max(max_wronskian, std::abs(wronskian(p) - 1.0));
    if (plot_data)
      csv << fmt17(zk) << ',' << fmt17(primary.g) << ',' << fmt17(primary.h)
          << ',' << fmt17(ode.g) << ',' << fmt17(ode.h) << ','
          << fmt17(pb.g) << ',' << fmt17(pb.h) << '\n';
  }
  if (plot_data && !csv) throw IoError("short write to routes.csv");

  const double worst =
      std::max({max_dg_ode, max_dh_ode, max_dg_pb, max_dh_pb});
  const bool ok = worst <= num.route_tol;

  nlohmann::ordered_json r;
  r["z_start_mm"] = t.z_start;
  r["z_end_mm"] = t.z_end;
  r["planes"] = t.planes;
  if (seed)
    r["seed"] = *seed;
  else
    r["seed"] = nullptr;
  r["primary_route"] = scan.closed() ? "closed_form" : "ode";
  r["max_abs_diff"] = {{"g_ode_vs_primary", max_dg_ode},
                       {"h_ode_vs_primary", max_dh_ode},
                       {"g_peano_baker_vs_primary", max_dg_pb},
                       {"h_peano_baker_vs_primary", max_dh_pb}};
  r["max_wronskian_minus_1"] = max_wronskian;
  r["tolerance"] = num.route_tol;
  r["within_tolerance"] = ok;
  if (!ok)
    defer_error = "crosscheck: routes disagree by " + fmt17(worst) +
                  ", beyond the tolerance " + fmt17(num.route_tol);
  return r;
}

// --------------------------------------------------------------- driver

inline nlohmann::ordered_json beam_json(const BeamConfig& bc,
                                        const BeamKinematics& b) {
  nlohmann::ordered_json j;
  j["particle"] = bc.particle;
  j[bc.from_voltage ? "voltage_v" : "kinetic_energy_ev"] = bc.energy_ev;
  j["p0c_ev"] = b.p0c;
  j["lambda_db_mm"] = b.lambda_db_mm();
  return j;
}

inline nlohmann::ordered_json field_json(const FieldConfig& fc,
                                         const LensStrength& ls) {
  nlohmann::ordered_json j;
  switch (fc.kind) {
  case FieldKind::glaser:
    j["model"] = "glaser";
    j["B0_tesla"] = fc.B0_tesla;
    j["a_mm"] = fc.a_mm;
    break;
  case FieldKind::uniform:
    j["model"] = "uniform";
    j["B0_tesla"] = fc.B0_tesla;
    break;
  case FieldKind::power_law:
    j["model"] = "power_law";
    j["B0_tesla"] = fc.B0_tesla;
    j["k_n"] = fc.k_n;
    j["n"] = fc.n;
    j["half"] = fc.negative_half ? "negative" : "positive";
    break;
  default:
    j["model"] = "tabulated";
    j["csv_path"] = fc.csv_path;
    j["z_span_mm"] = {ls.profile().z_min(), ls.profile().z_max()};
    break;
  }
  j["alpha0_per_mm"] = ls.alpha0();
  j["char_length_mm"] = ls.profile().char_length();
  return j;
}

inline void execute(const RunConfig& cfg, const RunOverrides& ov) {
  namespace fs = std::filesystem;
  const BeamKinematics beam = build_beam(cfg.beam);
  const LensStrength ls(build_field(cfg.field), beam);

  const fs::path out_dir(cfg.output.directory);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());

  std::string defer_error;
  nlohmann::ordered_json results;
  if (const auto* t = std::get_if<TraceTask>(&cfg.task))
    results = run_trace(ls, *t, out_dir, cfg.output.plot_data);
  else if (const auto* t = std::get_if<CardinalTask>(&cfg.task))
    results = run_cardinal(ls, *t, cfg.numerics, out_dir,
                           cfg.output.plot_data);
  else if (const auto* t = std::get_if<AberrationsTask>(&cfg.task))
    results = run_aberrations(ls, *t, cfg.numerics, out_dir,
                              cfg.output.plot_data);
  else if (const auto* t = std::get_if<PropagateTask>(&cfg.task))
    results = run_propagate(ls, *t, out_dir, cfg.output.plot_data);
  else
    results = run_crosscheck(ls, std::get<CrosscheckTask>(cfg.task),
                             cfg.numerics, ov.seed, out_dir,
                             cfg.output.plot_data, defer_error);

  nlohmann::ordered_json summary;
  summary["library"] = "lenscope";
  summary["version"] = library_version;
  {
    char hex[32];
    std::snprintf(hex, sizeof hex, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(cfg.raw_text)));
    summary["config_hash"] = hex;
  }
  summary["task"] = cfg.task_name();
  summary["thread_cap"] = thread_cap_from_env();
  summary["beam"] = beam_json(cfg.beam, beam);
  summary["field"] = field_json(cfg.field, ls);
  summary["numerics"] = {
      {"quad_tol", cfg.numerics.quad_tol},
      {"ode_rel_tol", cfg.numerics.ode_rel_tol},
      {"image_tol", cfg.numerics.image_tol},
      {"route_tol", cfg.numerics.route_tol},
      {"peano_baker_order", cfg.numerics.peano_baker_order},
      {"peano_baker_segments", cfg.numerics.peano_baker_segments},
      {"peano_baker_steps", cfg.numerics.peano_baker_steps}};
  summary["results"] = results;

  const fs::path summary_path = out_dir / "summary.json";
  write_text(summary_path, dump_summary(summary));
  std::cout << "lenscope " << cfg.task_name() << ": wrote "
            << summary_path.string() << "\n";

  // The summary is on disk either way; a failed agreement gate still
  // surfaces as a numeric failure.
  if (!defer_error.empty()) throw NumericError(defer_error);
}

} // namespace detail

/// Execute the configuration at config_path and map the outcome onto the
/// process exit contract: 0 success, 2 configuration problem (message
/// names the JSON field), 3 numeric or domain failure, 4 filesystem
/// failure.
inline int run(const std::string& config_path, const RunOverrides& ov = {}) {
  try {
    RunConfig cfg = parse_run_config(config_path);
    if (!ov.subcommand.empty() && ov.subcommand != cfg.task_name())
      throw ConfigError("task", std::string("config declares task '") +
                                    cfg.task_name() + "' but the '" +
                                    ov.subcommand +
                                    "' subcommand was invoked");
    if (!ov.out_dir.empty()) cfg.output.directory = ov.out_dir;
    if (ov.tol) {
      if (!(*ov.tol > 0.0))
        throw ConfigError("--tol", "must be positive");
      cfg.numerics.quad_tol = *ov.tol;
      cfg.numerics.route_tol = *ov.tol;
    }
    detail::execute(cfg, ov);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "lenscope: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "lenscope: filesystem error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "lenscope: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "lenscope: " << e.what() << "\n";
    return 3;
  }
}

} // namespace lenscope

#include "morphquad/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace morphquad {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> telemetry_columns() {
  std::vector<std::string> c = {"time",  "x",     "y",     "z",     "vx",    "vy",   "vz",
                                "qw",    "qx",    "qy",    "qz",    "p",     "q",    "r",
                                "ex",    "ey",    "ez",    "collective", "mx", "my", "mz"};
  for (const char* prefix : {"f_cmd", "f", "omega_sq"}) {
    for (int i = 1; i <= 4; ++i) c.push_back(std::string(prefix) + std::to_string(i));
  }
  for (const char* s : {"power", "energy"}) c.push_back(s);
  for (const char* prefix : {"theta", "theta_target"}) {
    for (int i = 1; i <= 4; ++i) c.push_back(std::string(prefix) + std::to_string(i) + "_deg");
  }
  for (const char* s : {"mass_hat", "cog_x_hat", "cog_y_hat", "hover_confidence", "mass_true",
                        "cog_x_true", "cog_y_true", "saturated", "yaw_scale",
                        "roll_pitch_scale"}) {
    c.push_back(s);
  }
  return c;
}

void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRow>& rows) {
  const auto cols = telemetry_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  std::vector<double> v;
  for (const TelemetryRow& r : rows) {
    v.clear();
    v.push_back(r.time);
    for (int i = 0; i < 3; ++i) v.push_back(r.truth.position[i]);
    for (int i = 0; i < 3; ++i) v.push_back(r.truth.velocity[i]);
    const Quat& q = r.truth.attitude;
    v.insert(v.end(), {q.w(), q.x(), q.y(), q.z()});
    for (int i = 0; i < 3; ++i) v.push_back(r.truth.rate[i]);
    for (int i = 0; i < 3; ++i) v.push_back(r.position_error[i]);
    v.push_back(r.wrench.collective);
    for (int i = 0; i < 3; ++i) v.push_back(r.wrench.moment[i]);
    for (const Vec4* x : {&r.thrust_cmd, &r.thrust_actual, &r.omega_sq}) {
      for (int i = 0; i < 4; ++i) v.push_back((*x)[i]);
    }
    v.push_back(r.power);
    v.push_back(r.energy);
    for (const Vec4* x : {&r.arms, &r.arms_target}) {
      for (int i = 0; i < 4; ++i) v.push_back(rad2deg((*x)[i]));
    }
    v.insert(v.end(), {r.estimate.mass, r.estimate.cog_xy.x(), r.estimate.cog_xy.y(),
                       r.estimate.hover_confidence, r.truth_mass.mass, r.truth_mass.cog.x(),
                       r.truth_mass.cog.y(), static_cast<double>(r.saturated), r.yaw_scale,
                       r.roll_pitch_scale});
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
    out << '\n';
  }
}

namespace {

// JSON has no NaN; missing metrics become null.
nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

nlohmann::ordered_json summary_to_json(const RunSummary& s) {
  nlohmann::ordered_json j;
  j["name"] = s.name;
  j["mode"] = to_string(s.mode);
  j["termination"] = to_string(s.termination);
  j["crash"] = s.crashed;
  j["reason"] = s.reason;
  j["end_time_s"] = number(s.end_time);
  j["energy_consumed_j"] = number(s.energy_consumed);
  j["mean_power_w"] = number(s.mean_power);
  j["flight_time_s"] = number(s.flight_time);
  j["steady_error_m"] = number(s.steady_error);
  j["max_error_m"] = number(s.max_error);
  j["max_error_overall_m"] = number(s.max_error_overall);
  j["mean_thrust_n"] = {number(s.mean_thrust[0]), number(s.mean_thrust[1]),
                        number(s.mean_thrust[2]), number(s.mean_thrust[3])};
  j["thrust_spread_n"] = number(s.thrust_spread);
  j["thrust_spread_ratio"] = number(s.thrust_spread_ratio);
  j["saturation_fraction"] = number(s.saturation_fraction);
  const Vec4 deg = s.final_arms.degrees();
  j["final_theta_deg"] = {deg[0], deg[1], deg[2], deg[3]};
  j["final_mass_estimate_kg"] = number(s.final_estimate.mass);
  j["final_cog_estimate_m"] = {number(s.final_estimate.cog_xy.x()),
                               number(s.final_estimate.cog_xy.y())};
  j["true_mass_kg"] = number(s.final_truth.mass);
  j["true_cog_m"] = {number(s.final_truth.cog.x()), number(s.final_truth.cog.y()),
                     number(s.final_truth.cog.z())};
  j["ticks"] = s.ticks;
  return j;
}

std::filesystem::path resolve_output_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return fallback;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace morphquad

#include "morphquad/config.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace morphquad {

ConfigError::ConfigError(std::string field, const std::string& message, std::string source,
                         int line)
    : ValidationError(field, message + " (" + source +
                                 (line > 0 ? ":" + std::to_string(line) : std::string()) + ")"),
      source_(std::move(source)),
      line_(line) {}

SweepDirection parse_direction(const std::string& label) {
  if (label == "+x") return {label, Vec2::UnitX()};
  if (label == "-x") return {label, -Vec2::UnitX()};
  if (label == "+y") return {label, Vec2::UnitY()};
  if (label == "-y") return {label, -Vec2::UnitY()};
  if (label == "xy") return {label, Vec2(1.0, 1.0).normalized()};
  throw ValidationError("direction", "unknown direction '" + label + "' (+x, -x, +y, -y, xy)");
}

void SweepSpec::validate() const {
  if (name.empty()) throw ValidationError("name", "must not be empty");
  if (threads < 0) throw ValidationError("threads", "must be >= 0");
  if (!(grid.payload_mass >= 0.0)) throw ValidationError("grid.payload_mass", "must be >= 0");
  for (std::size_t i = 0; i < grid.offsets.size(); ++i) {
    if (!(grid.offsets[i] >= 0.0) || !std::isfinite(grid.offsets[i])) {
      throw ValidationError("grid.offsets[" + std::to_string(i) + "]", "must be finite and >= 0");
    }
  }
  base.validate();
}

namespace {

constexpr double kDeg = kPi / 180.0;

struct Context {
  std::string source;
  std::filesystem::path base_dir;
  std::map<std::string, int> lines;
};

int line_of(const YAML::Node& node) {
  if (!node.IsDefined()) return 0;
  const YAML::Mark m = node.Mark();
  return m.line >= 0 ? m.line + 1 : 0;
}

[[noreturn]] void fail(const Context& ctx, const std::string& field, const std::string& message,
                       const YAML::Node& at) {
  throw ConfigError(field, message, ctx.source, line_of(at));
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double as_number(const YAML::Node& node, const std::string& field, const Context& ctx) {
  if (!node.IsScalar()) fail(ctx, field, "expected a number", node);
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    fail(ctx, field, "expected a number, got '" + node.Scalar() + "'", node);
  }
}

class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path, Context& ctx)
      : node_(node), path_(std::move(path)), ctx_(ctx) {
    if (node_.IsDefined() && !node_.IsNull() && !node_.IsMap()) {
      fail(ctx_, path_, "expected a mapping", node_);
    }
  }

  bool has(const std::string& key) const {
    return node_.IsMap() && node_[key].IsDefined() && !node_[key].IsNull();
  }

  YAML::Node get(const std::string& key) {
    used_.insert(key);
    const YAML::Node n = node_.IsMap() ? node_[key] : YAML::Node();
    if (n.IsDefined()) ctx_.lines[join(path_, key)] = line_of(n);
    return n;
  }

  YAML::Node require(const std::string& key) {
    if (!has(key)) fail(ctx_, join(path_, key), "required key missing", node_);
    return get(key);
  }

  void number(const std::string& key, double& out, double scale = 1.0) {
    if (!has(key)) return;
    out = as_number(get(key), join(path_, key), ctx_) * scale;
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const YAML::Node n = get(key);
    try {
      out = n.as<Int>();
    } catch (const YAML::Exception&) {
      fail(ctx_, join(path_, key), "expected an integer, got '" + n.Scalar() + "'", n);
    }
  }

  void text(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const YAML::Node n = get(key);
    if (!n.IsScalar()) fail(ctx_, join(path_, key), "expected a string", n);
    out = n.Scalar();
  }

  template <int N>
  void vector(const std::string& key, Eigen::Matrix<double, N, 1>& out) {
    if (!has(key)) return;
    const YAML::Node n = get(key);
    const std::string field = join(path_, key);
    if (!n.IsSequence() || n.size() != N) {
      fail(ctx_, field, "expected a list of " + std::to_string(N) + " numbers", n);
    }
    for (int i = 0; i < N; ++i) out[i] = as_number(n[i], field, ctx_);
  }

  void matrix(const std::string& key, Mat3& out) {
    if (!has(key)) return;
    const YAML::Node n = get(key);
    const std::string field = join(path_, key);
    if (!n.IsSequence() || n.size() != 3) fail(ctx_, field, "expected 3 rows of 3 numbers", n);
    for (int r = 0; r < 3; ++r) {
      if (!n[r].IsSequence() || n[r].size() != 3) {
        fail(ctx_, field, "expected 3 rows of 3 numbers", n[r]);
      }
      for (int c = 0; c < 3; ++c) out(r, c) = as_number(n[r][c], field, ctx_);
    }
  }

  /// Rejects keys nobody asked for.
  void finish() const {
    if (!node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.Scalar();
      if (!used_.count(key)) fail(ctx_, join(path_, key), "unknown key", kv.first);
    }
  }

  const std::string& path() const { return path_; }
  Context& context() { return ctx_; }

 private:
  YAML::Node node_;
  std::string path_;
  Context& ctx_;
  std::set<std::string> used_;
};

// Each visitor gets (key, value, scale) where file value * scale = memory value.
template <class Airframe, class F>
void airframe_numbers(Airframe& a, F&& f) {
  f("body_width", a.body_width, 1.0);
  f("arm_length", a.arm_length, 1.0);
  f("body_mass", a.body_mass, 1.0);
  f("arm_mass", a.arm_mass, 1.0);
  f("arm_com_fraction", a.arm_com_fraction, 1.0);
  f("arm_com_z", a.arm_com_z, 1.0);
  f("lift_coeff", a.lift_coeff, 1.0);
  f("drag_coeff", a.drag_coeff, 1.0);
  f("power_coeff", a.power_coeff, 1.0);
  f("cog_z_nominal", a.cog_z_nominal, 1.0);
  f("theta_min_deg", a.theta_min, kDeg);
  f("theta_max_deg", a.theta_max, kDeg);
  f("prop_diameter", a.prop_diameter, 1.0);
  f("max_thrust", a.max_thrust, 1.0);
}

template <class Gains, class F>
void gain_numbers(Gains& g, F&& f) {
  f("pos_p", g.pos_p, 1.0);
  f("pos_d", g.pos_d, 1.0);
  f("pos_i", g.pos_i, 1.0);
  f("att", g.att, 1.0);
  f("rate_p", g.rate_p, 1.0);
  f("rate_d", g.rate_d, 1.0);
  f("rate_i", g.rate_i, 1.0);
  f("pos_integral_limit", g.pos_integral_limit, 1.0);
  f("rate_integral_limit", g.rate_integral_limit, 1.0);
}

template <class Est, class F>
void estimator_numbers(Est& e, F&& f) {
  f("time_constant", e.time_constant, 1.0);
  f("max_tilt_deg", e.max_tilt, kDeg);
  f("max_rate_deg_s", e.max_rate, kDeg);
  f("max_accel", e.max_accel, 1.0);
  f("accel_filter_time", e.accel_filter_time, 1.0);
  f("mass_floor_slack", e.mass_floor_slack, 1.0);
  f("min_payload_mass", e.min_payload_mass, 1.0);
}

template <class Opt, class F>
void optimizer_numbers(Opt& o, F&& f) {
  f("beta1", o.beta1, 1.0);
  f("beta1_growth_cap", o.beta1_growth_cap, 1.0);
  f("beta2", o.beta2, 1.0);
  f("beta2_decay", o.beta2_decay, 1.0);
  f("eta_slack", o.eta_slack, 1.0);
  f("grad_step_deg", o.grad_step, kDeg);
  f("tol_angle_deg", o.tol_angle, kDeg);
  f("tol_residual", o.tol_residual, 1.0);
  f("softmin_power", o.softmin_power, 1.0);
  f("contact_tolerance", o.contact_tolerance, 1.0);
}

template <class Sim, class F>
void sim_numbers(Sim& s, F&& f) {
  f("motor_time_constant", s.motor_time_constant, 1.0);
  f("arm_slew_rate_deg_s", s.arm_slew_rate, kDeg);
  f("crash_tilt_deg", s.crash_tilt, kDeg);
  f("saturation_timeout", s.saturation_timeout, 1.0);
  f("usable_energy", s.usable_energy, 1.0);
}

template <class Rates, class F>
void rate_numbers(Rates& r, F&& f) {
  f("physics_dt", r.physics_dt, 1.0);
  f("attitude_hz", r.attitude_hz, 1.0);
  f("position_hz", r.position_hz, 1.0);
  f("optimizer_hz", r.optimizer_hz, 1.0);
}

template <class Noise, class F>
void noise_numbers(Noise& n, F&& f) {
  f("position", n.position, 1.0);
  f("velocity", n.velocity, 1.0);
  f("attitude_deg", n.attitude, kDeg);
  f("rate_deg_s", n.rate, kDeg);
  f("thrust", n.thrust, 1.0);
}

template <class T, class Visit>
void read_numbers(MapReader& r, T& target, Visit visit) {
  visit(target, [&](const char* key, double& v, double scale) { r.number(key, v, scale); });
}

AirframeParams read_airframe(MapReader& r) {
  AirframeParams a;
  read_numbers(r, a, [](auto& t, auto f) { airframe_numbers(t, f); });
  r.vector("body_com", a.body_com);
  // Inertias default to solid boxes of the given masses and sizes.
  a.body_inertia_cm = box_inertia(a.body_mass, a.body_width, a.body_width,
                                  AirframeParams::kDefaultBodyHeight);
  a.arm_inertia_cm = box_inertia(a.arm_mass, a.arm_length, AirframeParams::kDefaultArmSection,
                                 AirframeParams::kDefaultArmSection);
  r.matrix("body_inertia", a.body_inertia_cm);
  r.matrix("arm_inertia", a.arm_inertia_cm);
  r.finish();
  return a;
}

YAML::Node parse_text(const std::string& text, const Context& ctx) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("", e.msg, ctx.source, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("", "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Context context_for(const std::string& source) {
  Context ctx;
  ctx.source = source;
  const std::filesystem::path p(source);
  ctx.base_dir = p.has_parent_path() ? p.parent_path() : std::filesystem::path(".");
  return ctx;
}

void check_version(MapReader& r) {
  const YAML::Node v = r.require("schema_version");
  int version = 0;
  r.integer("schema_version", version);
  if (version != kSchemaVersion) {
    fail(r.context(), "schema_version",
         "unsupported version " + std::to_string(version) + ", expected " +
             std::to_string(kSchemaVersion),
         v);
  }
}

PayloadSpec read_payload(MapReader& r, const AirframeParams& airframe) {
  double mass = 0.0;
  Vec3 position = Vec3::Zero();
  r.number("mass", mass);
  r.vector("position", position);
  PayloadSpec p = PayloadSpec::cube(mass, position, airframe);
  r.matrix("inertia", p.inertia_cm);
  return p;
}

// Keys shared by a standalone scenario and the base of a sweep.
ScenarioSpec read_scenario_body(MapReader& r) {
  Context& ctx = r.context();
  ScenarioSpec spec;
  r.text("name", spec.name);
  if (r.has("mode")) {
    const YAML::Node n = r.get("mode");
    try {
      spec.mode = parse_flight_mode(n.Scalar());
    } catch (const ValidationError& e) {
      fail(ctx, join(r.path(), "mode"), "unknown mode '" + n.Scalar() + "'", n);
    }
  }
  r.text("output_dir", spec.output_dir);

  if (r.has("airframe")) {
    const YAML::Node n = r.get("airframe");
    if (n.IsScalar()) {
      const std::filesystem::path file = ctx.base_dir / n.Scalar();
      if (!std::filesystem::exists(file)) {
        fail(ctx, join(r.path(), "airframe"), "file '" + file.string() + "' does not exist", n);
      }
      spec.airframe = load_airframe(file.string());
    } else {
      MapReader sub(n, join(r.path(), "airframe"), ctx);
      spec.airframe = read_airframe(sub);
    }
  }

  r.number("duration", spec.duration);
  r.number("settle_time", spec.settle_time);
  r.integer("seed", spec.seed);
  r.vector("start_position", spec.start_position);

  if (r.has("initial_payload")) {
    MapReader sub(r.get("initial_payload"), join(r.path(), "initial_payload"), ctx);
    spec.initial_payload = read_payload(sub, spec.airframe);
    sub.finish();
  }

  if (r.has("waypoints")) {
    const YAML::Node list = r.get("waypoints");
    if (!list.IsSequence()) fail(ctx, join(r.path(), "waypoints"), "expected a list", list);
    for (std::size_t i = 0; i < list.size(); ++i) {
      MapReader w(list[i], join(r.path(), "waypoints[" + std::to_string(i) + "]"), ctx);
      Waypoint wp;
      as_number(w.require("time"), join(w.path(), "time"), ctx);
      w.number("time", wp.time);
      w.require("position");
      w.vector("position", wp.position);
      w.number("yaw_deg", wp.yaw, kDeg);
      w.finish();
      spec.waypoints.push_back(wp);
    }
  }

  if (r.has("events")) {
    const YAML::Node list = r.get("events");
    if (!list.IsSequence()) fail(ctx, join(r.path(), "events"), "expected a list", list);
    for (std::size_t i = 0; i < list.size(); ++i) {
      MapReader e(list[i], join(r.path(), "events[" + std::to_string(i) + "]"), ctx);
      PayloadEvent ev;
      as_number(e.require("time"), join(e.path(), "time"), ctx);
      e.number("time", ev.time);
      const YAML::Node kind = e.require("kind");
      if (kind.Scalar() == "attach") {
        ev.kind = PayloadEvent::Kind::attach;
        e.require("mass");
        ev.payload = read_payload(e, spec.airframe);
      } else if (kind.Scalar() == "detach") {
        ev.kind = PayloadEvent::Kind::detach;
      } else {
        fail(ctx, join(e.path(), "kind"), "expected attach or detach", kind);
      }
      e.finish();
      spec.events.push_back(ev);
    }
  }

  auto section = [&](const char* key, auto& target, auto visit) {
    if (!r.has(key)) return;
    MapReader sub(r.get(key), join(r.path(), key), ctx);
    read_numbers(sub, target, visit);
    sub.finish();
  };

  section("controller", spec.gains, [](auto& t, auto f) { gain_numbers(t, f); });
  section("estimator", spec.estimator, [](auto& t, auto f) { estimator_numbers(t, f); });
  if (r.has("optimizer")) {
    MapReader sub(r.get("optimizer"), join(r.path(), "optimizer"), ctx);
    read_numbers(sub, spec.optimizer, [](auto& t, auto f) { optimizer_numbers(t, f); });
    sub.integer("max_iters", spec.optimizer.max_iters);
    sub.finish();
  }
  section("sim", spec.sim, [](auto& t, auto f) { sim_numbers(t, f); });
  if (r.has("rates")) {
    MapReader sub(r.get("rates"), join(r.path(), "rates"), ctx);
    read_numbers(sub, spec.rates, [](auto& t, auto f) { rate_numbers(t, f); });
    sub.integer("telemetry_decimation", spec.rates.telemetry_decimation);
    sub.finish();
  }
  section("noise", spec.noise, [](auto& t, auto f) { noise_numbers(t, f); });
  return spec;
}

// Re-raises a semantic validation failure with the line of the offending key.
template <class Fn>
void validate_with_lines(const Context& ctx, const std::string& prefix, Fn&& validate) {
  try {
    validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    const std::string& field = e.field();
    std::string message = e.what();
    if (!field.empty() && message.rfind(field + ": ", 0) == 0) {
      message = message.substr(field.size() + 2);
    }
    int line = 0;
    for (const std::string& key : {field, join(prefix, field)}) {
      if (auto it = ctx.lines.find(key); it != ctx.lines.end()) line = it->second;
      if (line) break;
    }
    if (!line && !field.empty()) {
      // Sub-objects name their fields without the section path.
      const std::string tail = "." + field;
      for (const auto& [key, l] : ctx.lines) {
        if (key.size() > tail.size() && key.compare(key.size() - tail.size(), tail.size(), tail) == 0) {
          line = l;
          break;
        }
      }
    }
    throw ConfigError(field, message, ctx.source, line);
  }
}

class Writer {
 public:
  Writer() { out_ << YAML::BeginMap; }

  Writer& key(const std::string& k) {
    out_ << YAML::Key << k << YAML::Value;
    return *this;
  }
  Writer& number(const std::string& k, double v, double scale = 1.0) {
    key(k);
    if (scale == 1.0) {
      out_ << format_number(v);
    } else {
      // Converted values carry round-off; 15 digits reads back to the same radians.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.15g", v / scale);
      out_ << std::string(buf);
    }
    return *this;
  }
  Writer& text(const std::string& k, const std::string& v) {
    key(k);
    out_ << YAML::DoubleQuoted << v;
    return *this;
  }
  template <int N>
  Writer& vector(const std::string& k, const Eigen::Matrix<double, N, 1>& v) {
    key(k);
    out_ << YAML::Flow << YAML::BeginSeq;
    for (int i = 0; i < N; ++i) out_ << format_number(v[i]);
    out_ << YAML::EndSeq;
    return *this;
  }
  Writer& matrix(const std::string& k, const Mat3& m) {
    key(k);
    out_ << YAML::BeginSeq;
    for (int r = 0; r < 3; ++r) {
      out_ << YAML::Flow << YAML::BeginSeq;
      for (int c = 0; c < 3; ++c) out_ << format_number(m(r, c));
      out_ << YAML::EndSeq;
    }
    out_ << YAML::EndSeq;
    return *this;
  }
  Writer& list(const std::string& k, const std::vector<std::string>& items, bool quoted) {
    key(k);
    out_ << YAML::Flow << YAML::BeginSeq;
    for (const auto& item : items) {
      if (quoted) out_ << YAML::DoubleQuoted;
      out_ << item;
    }
    out_ << YAML::EndSeq;
    return *this;
  }
  void begin_map(const std::string& k) {
    key(k);
    out_ << YAML::BeginMap;
  }
  void begin_seq(const std::string& k) {
    key(k);
    out_ << YAML::BeginSeq;
  }
  void begin_item() { out_ << YAML::BeginMap; }
  void end_map() { out_ << YAML::EndMap; }
  void end_seq() { out_ << YAML::EndSeq; }
  void raw(const std::string& v) { out_ << v; }

  std::string str() {
    out_ << YAML::EndMap;
    return std::string(out_.c_str()) + "\n";
  }

 private:
  YAML::Emitter out_;
};

template <class T, class Visit>
void write_numbers(Writer& w, const T& source, Visit visit) {
  T copy = source;
  visit(copy, [&](const char* key, double& v, double scale) { w.number(key, v, scale); });
}

void write_airframe(Writer& w, const AirframeParams& a) {
  write_numbers(w, a, [](auto& t, auto f) { airframe_numbers(t, f); });
  w.vector("body_com", a.body_com);
  w.matrix("body_inertia", a.body_inertia_cm);
  w.matrix("arm_inertia", a.arm_inertia_cm);
}

void write_payload(Writer& w, const PayloadSpec& p) {
  w.number("mass", p.mass);
  w.vector("position", p.position);
  w.matrix("inertia", p.inertia_cm);
}

void write_scenario_body(Writer& w, const ScenarioSpec& s) {
  w.text("name", s.name);
  w.text("mode", to_string(s.mode));
  w.text("output_dir", s.output_dir);
  w.begin_map("airframe");
  write_airframe(w, s.airframe);
  w.end_map();
  w.number("duration", s.duration);
  w.number("settle_time", s.settle_time);
  w.key("seed");
  w.raw(std::to_string(s.seed));
  w.vector("start_position", s.start_position);
  w.begin_map("initial_payload");
  write_payload(w, s.initial_payload);
  w.end_map();
  w.begin_seq("waypoints");
  for (const Waypoint& wp : s.waypoints) {
    w.begin_item();
    w.number("time", wp.time);
    w.vector("position", wp.position);
    w.number("yaw_deg", wp.yaw, kDeg);
    w.end_map();
  }
  w.end_seq();
  w.begin_seq("events");
  for (const PayloadEvent& e : s.events) {
    w.begin_item();
    w.number("time", e.time);
    if (e.kind == PayloadEvent::Kind::attach) {
      w.text("kind", "attach");
      write_payload(w, e.payload);
    } else {
      w.text("kind", "detach");
    }
    w.end_map();
  }
  w.end_seq();

  w.begin_map("controller");
  write_numbers(w, s.gains, [](auto& t, auto f) { gain_numbers(t, f); });
  w.end_map();
  w.begin_map("estimator");
  write_numbers(w, s.estimator, [](auto& t, auto f) { estimator_numbers(t, f); });
  w.end_map();
  w.begin_map("optimizer");
  write_numbers(w, s.optimizer, [](auto& t, auto f) { optimizer_numbers(t, f); });
  w.key("max_iters");
  w.raw(std::to_string(s.optimizer.max_iters));
  w.end_map();
  w.begin_map("sim");
  write_numbers(w, s.sim, [](auto& t, auto f) { sim_numbers(t, f); });
  w.end_map();
  w.begin_map("rates");
  write_numbers(w, s.rates, [](auto& t, auto f) { rate_numbers(t, f); });
  w.key("telemetry_decimation");
  w.raw(std::to_string(s.rates.telemetry_decimation));
  w.end_map();
  w.begin_map("noise");
  write_numbers(w, s.noise, [](auto& t, auto f) { noise_numbers(t, f); });
  w.end_map();
}

}  // namespace

AirframeParams parse_airframe(const std::string& text, const std::string& source) {
  Context ctx = context_for(source);
  const YAML::Node root = parse_text(text, ctx);
  MapReader r(root, "", ctx);
  AirframeParams a;
  if (r.has("schema_version")) check_version(r);
  a = read_airframe(r);
  validate_with_lines(ctx, "", [&] { a.validate(); });
  return a;
}

AirframeParams load_airframe(const std::string& path) {
  return parse_airframe(read_file(path), path);
}

std::string dump_airframe(const AirframeParams& params) {
  Writer w;
  w.key("schema_version");
  w.raw(std::to_string(kSchemaVersion));
  write_airframe(w, params);
  return w.str();
}

ScenarioSpec parse_scenario(const std::string& text, const std::string& source) {
  Context ctx = context_for(source);
  const YAML::Node root = parse_text(text, ctx);
  if (!root.IsMap()) fail(ctx, "", "expected a mapping at the top level", root);
  MapReader r(root, "", ctx);
  check_version(r);
  ScenarioSpec spec = read_scenario_body(r);
  r.finish();
  validate_with_lines(ctx, "", [&] { spec.validate(); });
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  return parse_scenario(read_file(path), path);
}

std::string dump_scenario(const ScenarioSpec& spec) {
  Writer w;
  w.key("schema_version");
  w.raw(std::to_string(kSchemaVersion));
  write_scenario_body(w, spec);
  return w.str();
}

SweepSpec parse_sweep(const std::string& text, const std::string& source) {
  Context ctx = context_for(source);
  const YAML::Node root = parse_text(text, ctx);
  if (!root.IsMap()) fail(ctx, "", "expected a mapping at the top level", root);
  MapReader r(root, "", ctx);
  check_version(r);
  SweepSpec spec;
  r.text("name", spec.name);
  r.integer("threads", spec.threads);
  if (r.has("base")) {
    const YAML::Node n = r.get("base");
    if (n.IsScalar()) {
      const std::filesystem::path file = ctx.base_dir / n.Scalar();
      if (!std::filesystem::exists(file)) {
        fail(ctx, "base", "file '" + file.string() + "' does not exist", n);
      }
      spec.base = load_scenario(file.string());
    } else {
      MapReader sub(n, "base", ctx);
      spec.base = read_scenario_body(sub);
      sub.finish();
    }
  }
  MapReader g(r.require("grid"), "grid", ctx);
  g.number("payload_mass", spec.grid.payload_mass);
  auto list = [&](const char* key) {
    if (!g.has(key)) return YAML::Node(YAML::NodeType::Sequence);
    const YAML::Node n = g.get(key);
    if (!n.IsSequence()) fail(ctx, join("grid", key), "expected a list", n);
    return n;
  };
  const YAML::Node offsets = list("offsets");
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    spec.grid.offsets.push_back(
        as_number(offsets[i], "grid.offsets[" + std::to_string(i) + "]", ctx));
  }
  const YAML::Node directions = list("directions");
  for (std::size_t i = 0; i < directions.size(); ++i) {
    try {
      spec.grid.directions.push_back(parse_direction(directions[i].Scalar()));
    } catch (const ValidationError& e) {
      fail(ctx, "grid.directions[" + std::to_string(i) + "]",
           "unknown direction '" + directions[i].Scalar() + "'", directions[i]);
    }
  }
  const YAML::Node modes = list("modes");
  for (std::size_t i = 0; i < modes.size(); ++i) {
    try {
      spec.grid.modes.push_back(parse_flight_mode(modes[i].Scalar()));
    } catch (const ValidationError& e) {
      fail(ctx, "grid.modes[" + std::to_string(i) + "]",
           "unknown mode '" + modes[i].Scalar() + "'", modes[i]);
    }
  }
  g.finish();
  r.finish();
  validate_with_lines(ctx, "base", [&] { spec.validate(); });
  return spec;
}

SweepSpec load_sweep(const std::string& path) { return parse_sweep(read_file(path), path); }

std::string dump_sweep(const SweepSpec& spec) {
  Writer w;
  w.key("schema_version");
  w.raw(std::to_string(kSchemaVersion));
  w.text("name", spec.name);
  w.key("threads");
  w.raw(std::to_string(spec.threads));
  w.begin_map("base");
  write_scenario_body(w, spec.base);
  w.end_map();
  w.begin_map("grid");
  w.number("payload_mass", spec.grid.payload_mass);
  std::vector<std::string> offsets, directions, modes;
  for (double o : spec.grid.offsets) offsets.push_back(format_number(o));
  for (const auto& d : spec.grid.directions) directions.push_back(d.label);
  for (FlightMode m : spec.grid.modes) modes.push_back(to_string(m));
  w.list("offsets", offsets, false);
  w.list("directions", directions, true);
  w.list("modes", modes, true);
  w.end_map();
  return w.str();
}

ConfigKind config_kind(const std::string& path) {
  Context ctx = context_for(path);
  const YAML::Node root = parse_text(read_file(path), ctx);
  if (!root.IsMap()) return ConfigKind::scenario;
  if (root["grid"].IsDefined()) return ConfigKind::sweep;
  std::set<std::string> airframe_keys = {"body_com", "body_inertia", "arm_inertia"};
  AirframeParams probe;
  airframe_numbers(probe, [&](const char* key, double&, double) { airframe_keys.insert(key); });
  bool any = false;
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    if (key == "schema_version") continue;
    if (!airframe_keys.count(key)) return ConfigKind::scenario;
    any = true;
  }
  return any ? ConfigKind::airframe : ConfigKind::scenario;
}

}  // namespace morphquad

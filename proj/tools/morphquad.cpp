// morphquad command-line front end.
//
// Exit codes: 0 success, 1 unexpected error or failed grid verification,
// 2 validation, 3 crash, 4 infeasible morphology.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "morphquad/config.hpp"
#include "morphquad/io.hpp"
#include "morphquad/sweep.hpp"

using namespace morphquad;

namespace {

enum Exit { kOk = 0, kError = 1, kValidation = 2, kCrash = 3, kInfeasible = 4 };

struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_run(const std::string& path, const std::string& out_flag, bool telemetry) {
  const ScenarioSpec spec = load_scenario(path);
  const TelemetryLog log = run_scenario(spec, telemetry);
  const auto dir = resolve_output_dir(out_flag, spec.output_dir);
  if (telemetry) {
    std::ostringstream csv;
    write_telemetry_csv(csv, log.rows);
    write_text_file(dir / (spec.name + "_telemetry.csv"), csv.str());
  }
  write_text_file(dir / (spec.name + "_summary.json"), summary_to_json(log.summary).dump(2) + "\n");

  const RunSummary& s = log.summary;
  std::printf("%s: %s after %.2f s, steady error %.4f m, spread %.2f%% of mg, flight time %.1f s\n",
              spec.name.c_str(), to_string(s.termination).c_str(), s.end_time, s.steady_error,
              100.0 * s.thrust_spread_ratio, s.flight_time);
  std::printf("outputs in %s\n", dir.string().c_str());
  if (s.crashed) {
    std::fprintf(stderr, "crash: %s: %s\n", to_string(s.termination).c_str(), s.reason.c_str());
    return kCrash;
  }
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& out_flag, int threads, bool quiet) {
  SweepSpec spec = load_sweep(path);
  if (threads > 0) spec.threads = threads;
  const auto rows = run_sweep(spec, spec.threads, [&](const SweepRow& r) {
    if (quiet) return;
    std::fprintf(stderr, "cell %zu %s %s %.3f m: %s\n", r.index, to_string(r.mode).c_str(),
                 r.direction.c_str(), r.offset,
                 r.ok ? to_string(r.summary.termination).c_str() : "error");
  });
  const auto dir = resolve_output_dir(out_flag, spec.base.output_dir);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  const auto file = dir / (spec.name + "_sweep.csv");
  write_text_file(file, csv.str());
  std::printf("%zu cells written to %s\n", rows.size(), file.string().c_str());
  return kOk;
}

struct MorphQuery {
  double mass = 0.0;
  Vec2 cog = Vec2::Zero();
};

struct MorphAnswer {
  OptimizerResult result;
  PayloadSpec payload;
  bool grid_checked = false;
  GridSearchResult grid;
  bool grid_ok = true;
};

MorphAnswer solve(const MorphQuery& q, const AirframeParams& params,
                  const OptimizerSettings& settings, double grid_step) {
  MorphAnswer a;
  a.payload = payload_for_cog(q.mass, q.cog, params);
  const MassModel model = payload_mass_model(params, a.payload);
  try {
    a.result = optimize_morphology(Morphology::x_config(), model, params, settings);
  } catch (const OptimizerFailedError& e) {
    throw Infeasible(e.what());
  }
  const RotorThrusts& f = a.result.objectives.hover;
  if (!a.result.objectives.feasible || (f.f.array() > params.max_thrust).any()) {
    std::ostringstream msg;
    msg << "hover needs thrusts (" << f.f.transpose() << ") N outside [0, " << params.max_thrust
        << "] N";
    throw Infeasible(msg.str());
  }
  if (grid_step > 0.0) {
    a.grid_checked = true;
    a.grid = grid_search(model, params, grid_step);
    a.grid_ok = a.result.objectives.efficiency >= a.grid.efficiency - 1e-4;
  }
  return a;
}

std::vector<std::string> morph_columns() {
  return {"mass_kg",    "cog_x_m",    "cog_y_m",    "status",      "theta1_deg", "theta2_deg",
          "theta3_deg", "theta4_deg", "eta_n_per_w", "controllability", "f1_n", "f2_n", "f3_n",
          "f4_n",       "spread_ratio", "iterations", "converged",  "residual",   "grid_eta",
          "grid_ok",    "message"};
}

void write_morph_row(std::ostream& out, const MorphQuery& q, const MorphAnswer* a,
                     const std::string& status, const std::string& message) {
  out << format_double(q.mass) << ',' << format_double(q.cog.x()) << ','
      << format_double(q.cog.y()) << ',' << status;
  if (a) {
    const Vec4 deg = a->result.morph.degrees();
    const Vec4 f = a->result.objectives.hover.f;
    for (int i = 0; i < 4; ++i) out << ',' << format_double(deg[i]);
    out << ',' << format_double(a->result.objectives.efficiency) << ','
        << format_double(a->result.objectives.controllability);
    for (int i = 0; i < 4; ++i) out << ',' << format_double(f[i]);
    out << ',' << format_double((f.maxCoeff() - f.minCoeff()) / (q.mass * kGravity)) << ','
        << a->result.iterations << ',' << (a->result.converged ? 1 : 0) << ','
        << format_double(a->result.residual) << ','
        << (a->grid_checked ? format_double(a->grid.efficiency) : "") << ','
        << (a->grid_checked ? (a->grid_ok ? "1" : "0") : "");
  } else {
    out << std::string(16, ',');
  }
  std::string m = message;
  for (char& c : m) {
    if (c == ',' || c == '\n') c = ';';
  }
  out << ',' << m << '\n';
}

void print_answer(const MorphQuery& q, const MorphAnswer& a) {
  const Vec4 deg = a.result.morph.degrees();
  const Vec4 f = a.result.objectives.hover.f;
  std::printf("mass            %.4f kg\n", q.mass);
  std::printf("cog             (%.4f, %.4f) m\n", q.cog.x(), q.cog.y());
  if (a.payload.mass > 0.0) {
    std::printf("payload         %.4f kg at (%.4f, %.4f) m\n", a.payload.mass,
                a.payload.position.x(), a.payload.position.y());
  }
  std::printf("theta           %.3f %.3f %.3f %.3f deg\n", deg[0], deg[1], deg[2], deg[3]);
  std::printf("eta             %.6f N/W\n", a.result.objectives.efficiency);
  std::printf("C               %.6f\n", a.result.objectives.controllability);
  std::printf("hover thrust    %.4f %.4f %.4f %.4f N (spread %.3f%% of mg)\n", f[0], f[1], f[2],
              f[3], 100.0 * (f.maxCoeff() - f.minCoeff()) / (q.mass * kGravity));
  std::printf("iterations      %d (%s, residual %.2e)\n", a.result.iterations,
              a.result.converged ? "converged" : "not converged", a.result.residual);
  if (a.grid_checked) {
    const Vec4 g = a.grid.best.degrees();
    std::printf("grid best       eta %.6f at %.0f %.0f %.0f %.0f deg (%ld feasible points)\n",
                a.grid.efficiency, g[0], g[1], g[2], g[3], a.grid.feasible);
    std::printf("grid check      %s (margin %.2e N/W)\n", a.grid_ok ? "PASS" : "FAIL",
                a.result.objectives.efficiency - a.grid.efficiency);
  }
}

// "y:0.2:0.01" -> CoG points along the axis from 0 to 0.2 m.
std::vector<Vec2> parse_cog_sweep(const std::string& text) {
  std::stringstream in(text);
  std::string axis, max_s, step_s;
  if (!std::getline(in, axis, ':') || !std::getline(in, max_s, ':') ||
      !std::getline(in, step_s)) {
    throw ValidationError("--cog-sweep", "expected AXIS:MAX:STEP, e.g. y:0.2:0.01");
  }
  const SweepDirection dir = parse_direction(axis.size() == 1 ? "+" + axis : axis);
  double max = 0.0, step = 0.0;
  try {
    max = std::stod(max_s);
    step = std::stod(step_s);
  } catch (const std::exception&) {
    throw ValidationError("--cog-sweep", "MAX and STEP must be numbers");
  }
  if (!(step > 0.0) || !(max >= 0.0)) {
    throw ValidationError("--cog-sweep", "need MAX >= 0 and STEP > 0");
  }
  std::vector<Vec2> out;
  const long n = std::lround(std::floor(max / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(k * step * dir.unit);
  return out;
}

std::vector<MorphQuery> read_batch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--batch", "cannot read '" + path + "'");
  std::vector<MorphQuery> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    if (number == 1 && line.find("mass") != std::string::npos) continue;
    std::stringstream s(line);
    std::string a, b, c;
    MorphQuery q;
    try {
      std::getline(s, a, ',');
      std::getline(s, b, ',');
      std::getline(s, c, ',');
      q.mass = std::stod(a);
      q.cog = Vec2(std::stod(b), std::stod(c));
    } catch (const std::exception&) {
      throw ValidationError("--batch", path + ":" + std::to_string(number) +
                                           ": expected mass_kg,cog_x_m,cog_y_m");
    }
    out.push_back(q);
  }
  return out;
}

struct MorphArgs {
  double mass = 0.0;
  std::vector<double> cog;
  std::string airframe;
  bool verify_grid = false;
  double grid_step_deg = 15.0;
  std::string cog_sweep;
  std::string batch;
  std::string csv;
  std::string out_flag;
};

int cmd_morphology(const MorphArgs& args) {
  const AirframeParams params = args.airframe.empty() ? AirframeParams{} : load_airframe(args.airframe);
  params.validate();
  const OptimizerSettings settings;
  const double grid_step = args.verify_grid ? deg2rad(args.grid_step_deg) : 0.0;
  if (args.verify_grid && !(args.grid_step_deg > 0.0)) {
    throw ValidationError("--grid-step-deg", "must be positive");
  }

  const bool batch = !args.cog_sweep.empty() || !args.batch.empty();
  if (!batch) {
    if (args.cog.size() != 2) throw ValidationError("--cog", "expected two numbers X Y");
    const MorphQuery q{args.mass, Vec2(args.cog[0], args.cog[1])};
    MorphAnswer a;
    try {
      a = solve(q, params, settings, grid_step);
    } catch (const DomainError& e) {
      throw ValidationError("--mass", e.what());
    }
    print_answer(q, a);
    return a.grid_ok ? kOk : kError;
  }

  std::vector<MorphQuery> queries;
  if (!args.batch.empty()) queries = read_batch(args.batch);
  if (!args.cog_sweep.empty()) {
    if (!(args.mass > 0.0)) throw ValidationError("--mass", "required with --cog-sweep");
    for (const Vec2& c : parse_cog_sweep(args.cog_sweep)) queries.push_back({args.mass, c});
  }
  std::ostringstream csv;
  const auto cols = morph_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
  csv << '\n';
  bool all_ok = true;
  for (const MorphQuery& q : queries) {
    try {
      const MorphAnswer a = solve(q, params, settings, grid_step);
      all_ok = all_ok && a.grid_ok;
      write_morph_row(csv, q, &a, "ok", "");
    } catch (const Infeasible& e) {
      write_morph_row(csv, q, nullptr, "infeasible", e.what());
    } catch (const DomainError& e) {
      write_morph_row(csv, q, nullptr, "invalid", e.what());
    }
  }
  std::filesystem::path file = args.csv;
  if (file.empty()) file = resolve_output_dir(args.out_flag, "output") / "morphology_sweep.csv";
  write_text_file(file, csv.str());
  std::printf("%zu rows written to %s\n", queries.size(), file.string().c_str());
  return all_ok ? kOk : kError;
}

int cmd_validate(const std::vector<std::string>& paths) {
  int code = kOk;
  for (const std::string& p : paths) {
    try {
      const ConfigKind kind = config_kind(p);
      if (kind == ConfigKind::sweep) {
        const SweepSpec s = load_sweep(p);
        std::printf("ok: %s (sweep, %zu cells)\n", p.c_str(), expand_sweep(s).size());
      } else if (kind == ConfigKind::airframe) {
        load_airframe(p);
        std::printf("ok: %s (airframe)\n", p.c_str());
      } else {
        load_scenario(p);
        std::printf("ok: %s (scenario)\n", p.c_str());
      }
    } catch (const ValidationError& e) {
      std::fprintf(stderr, "invalid: %s: %s\n", p.c_str(), e.what());
      code = kValidation;
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morphing quadrotor simulation and morphology tools"};
  app.require_subcommand(1);

  std::string out_flag;
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("-o,--output", out_flag,
                    "Output directory (default: $MORPHQUAD_OUTPUT_DIR, then the config's)");
  };

  std::string run_path;
  bool no_telemetry = false;
  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("scenario", run_path, "Scenario YAML file")->required();
  run->add_flag("--no-telemetry", no_telemetry, "Write only the JSON summary");
  add_output(run);

  std::string sweep_path;
  int threads = 0;
  bool quiet = false;
  CLI::App* sweep = app.add_subcommand("sweep", "Run a payload offset x direction x mode grid");
  sweep->add_option("sweep", sweep_path, "Sweep YAML file")->required();
  sweep->add_option("-j,--jobs", threads, "Worker threads (0: from the file, else all cores)");
  sweep->add_flag("-q,--quiet", quiet, "No per-cell progress");
  add_output(sweep);

  MorphArgs margs;
  CLI::App* morph = app.add_subcommand("morphology", "Optimal arm angles for a mass and CoG");
  morph->add_option("--mass", margs.mass, "Total mass, kg");
  morph->add_option("--cog", margs.cog, "CoG x y, m")->expected(2);
  morph->add_option("--airframe", margs.airframe, "Airframe YAML file");
  morph->add_flag("--verify-grid", margs.verify_grid, "Compare against an exhaustive grid search");
  morph->add_option("--grid-step-deg", margs.grid_step_deg, "Grid spacing, deg");
  morph->add_option("--cog-sweep", margs.cog_sweep,
                    "Batch over CoG points AXIS:MAX:STEP (axis x, y or xy)");
  morph->add_option("--batch", margs.batch, "Batch CSV with mass_kg,cog_x_m,cog_y_m rows");
  morph->add_option("--csv", margs.csv, "Batch output file");
  add_output(morph);

  std::vector<std::string> validate_paths;
  CLI::App* validate = app.add_subcommand("validate", "Check scenario or sweep files");
  validate->add_option("files", validate_paths, "YAML files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (run->parsed()) return cmd_run(run_path, out_flag, !no_telemetry);
    if (sweep->parsed()) return cmd_sweep(sweep_path, out_flag, threads, quiet);
    if (morph->parsed()) {
      margs.out_flag = out_flag;
      return cmd_morphology(margs);
    }
    if (validate->parsed()) return cmd_validate(validate_paths);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kValidation;
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kInfeasible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
  return kError;
}

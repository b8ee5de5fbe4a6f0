#include "morphquad/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "morphquad/io.hpp"

namespace morphquad {

std::vector<SweepCell> expand_sweep(const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  for (FlightMode mode : spec.grid.modes) {
    for (const SweepDirection& dir : spec.grid.directions) {
      for (double offset : spec.grid.offsets) {
        SweepCell c;
        c.index = cells.size();
        c.mode = mode;
        c.direction = dir;
        c.offset = offset;
        c.scenario = spec.base;
        c.scenario.mode = mode;
        const Vec2 xy = offset * dir.unit;
        c.scenario.initial_payload = PayloadSpec::cube(
            spec.grid.payload_mass, Vec3(xy.x(), xy.y(), 0.0), spec.base.airframe);
        std::ostringstream name;
        name << spec.name << '_' << to_string(mode) << '_' << dir.label << '_' << offset;
        c.scenario.name = name.str();
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads,
                                const std::function<void(const SweepRow&)>& on_done) {
  spec.validate();
  const std::vector<SweepCell> cells = expand_sweep(spec);
  std::vector<SweepRow> rows(cells.size());
  if (cells.empty()) return rows;

  unsigned workers = threads > 0 ? static_cast<unsigned>(threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));

  std::atomic<std::size_t> next{0};
  std::mutex report;
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const SweepCell& c = cells[i];
      SweepRow& row = rows[i];
      row.index = c.index;
      row.mode = c.mode;
      row.direction = c.direction.label;
      row.offset = c.offset;
      row.payload_mass = c.scenario.initial_payload.mass;
      row.payload_xy = c.scenario.initial_payload.position.head<2>();
      try {
        row.summary = run_scenario(c.scenario, false).summary;
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      if (on_done) {
        std::lock_guard<std::mutex> lock(report);
        on_done(row);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

std::vector<std::string> sweep_columns() {
  return {"cell",          "mode",           "direction",      "offset_m",
          "payload_mass_kg", "payload_x_m",  "payload_y_m",    "status",
          "crash",         "flight_time_s",  "mean_power_w",   "thrust_spread_n",
          "thrust_spread_ratio", "steady_error_m", "max_error_m", "theta1_deg",
          "theta2_deg",    "theta3_deg",     "theta4_deg",     "error"};
}

namespace {

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  const auto cols = sweep_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const SweepRow& r : rows) {
    const RunSummary& s = r.summary;
    out << r.index << ',' << to_string(r.mode) << ',' << r.direction << ','
        << format_double(r.offset) << ',' << format_double(r.payload_mass) << ','
        << format_double(r.payload_xy.x()) << ',' << format_double(r.payload_xy.y()) << ',';
    if (!r.ok) {
      out << "error,,,,,,,,,,,," << csv_quote(r.error) << '\n';
      continue;
    }
    const Vec4 deg = s.final_arms.degrees();
    out << to_string(s.termination) << ',' << (s.crashed ? 1 : 0) << ','
        << format_double(s.flight_time) << ',' << format_double(s.mean_power) << ','
        << format_double(s.thrust_spread) << ',' << format_double(s.thrust_spread_ratio) << ','
        << format_double(s.steady_error) << ',' << format_double(s.max_error) << ','
        << format_double(deg[0]) << ',' << format_double(deg[1]) << ','
        << format_double(deg[2]) << ',' << format_double(deg[3]) << ',' << csv_quote(s.reason)
        << '\n';
  }
}

}  // namespace morphquad

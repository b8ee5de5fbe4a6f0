#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "morphquad/config.hpp"

namespace morphquad {

struct SweepCell {
  std::size_t index = 0;
  FlightMode mode = FlightMode::morphing;
  SweepDirection direction;
  double offset = 0.0;  // m
  ScenarioSpec scenario;
};

struct SweepRow {
  std::size_t index = 0;
  FlightMode mode = FlightMode::morphing;
  std::string direction;
  double offset = 0.0;
  double payload_mass = 0.0;
  Vec2 payload_xy = Vec2::Zero();
  bool ok = false;          // false: the cell threw before finishing
  std::string error;
  RunSummary summary;
};

/// Cells in index order: mode, then direction, then offset.
std::vector<SweepCell> expand_sweep(const SweepSpec& spec);

/// Runs every cell on a pool of `threads` workers (0: hardware concurrency).
/// Rows come back in cell order whatever the scheduling; a failing cell is
/// recorded in its row and the rest continue.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, int threads = 0,
                                const std::function<void(const SweepRow&)>& on_done = {});

std::vector<std::string> sweep_columns();
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace morphquad

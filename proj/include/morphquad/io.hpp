#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphquad/simulator.hpp"

namespace morphquad {

inline constexpr const char* kOutputDirEnv = "MORPHQUAD_OUTPUT_DIR";

/// Shortest text that parses back to the same double; "nan" / "inf" otherwise.
std::string format_double(double v);

/// Header names of write_telemetry_csv, in column order. Angles in degrees.
std::vector<std::string> telemetry_columns();
void write_telemetry_csv(std::ostream& out, const std::vector<TelemetryRow>& rows);

nlohmann::ordered_json summary_to_json(const RunSummary& summary);

/// `flag` if non-empty, else $MORPHQUAD_OUTPUT_DIR if set, else `fallback`.
std::filesystem::path resolve_output_dir(const std::string& flag, const std::string& fallback);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace morphquad

#pragma once

// Machine-readable output: one JSON document per run, CSV tables with a
// header row and 17 significant digits. Nothing time- or host-dependent is
// written, so identical inputs give byte-identical files.

#include "mage/config.hpp"
#include "mage/continuation.hpp"
#include "mage/identities.hpp"
#include "mage/monitors.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mage {

inline constexpr int kReportSchemaVersion = 1;

std::string format_double(double x);  // %.17g; nan/inf spelled out

/// Columns i,j,x,t,<name>.
std::string field_csv(const Field& f, const std::string& name = "value");
/// Reads a field written by field_csv onto `grid`; every node must appear
/// exactly once. Throws ConfigError on malformed input.
Field read_field_csv(const std::string& path, const ReducedGrid& grid);

/// Generic table writer: header row then one row per entry.
std::string table_csv(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

std::string profile_csv(const std::vector<SliceProfile>& profile);

nlohmann::ordered_json to_json(const StepRecord& rec);
nlohmann::ordered_json to_json(const MonitorReport& m);
nlohmann::ordered_json to_json(const IdentityCheck& c);
nlohmann::ordered_json to_json(const PotentialField& p);  // solve summary

/// Skeleton shared by every command: schema version, command, the resolved
/// config and the thread setting.
nlohmann::ordered_json report_header(const std::string& command,
                                     const ConfigValues& values,
                                     const std::string& threads);

/// Writes via a temporary file and rename.
void write_text_file(const std::string& path, const std::string& text);
std::string dump_json(const nlohmann::ordered_json& doc);

}  // namespace mage

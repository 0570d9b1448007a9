#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trajprune/entropy.h"
#include "trajprune/pruning.h"
#include "trajprune/trajectory.h"

#include "json.hpp"

namespace trajprune {

enum class Format { kJsonl, kCsv };

// ".csv" selects CSV; anything else is JSONL.
Format FormatFromPath(const std::filesystem::path& path);
// "jsonl" or "csv"; throws ConfigError otherwise.
Format ParseFormat(std::string_view name);

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double value);

// One JSONL record: {"id": "...", "points": [[x, y, heading], ...]}.
// Points may also be written as [x, y] (heading 0) or as objects with
// "x", "y" and optional "heading" keys. A missing id becomes
// "<source>#<line_number>". Headings are normalized into [-pi, pi).
// Throws ValidationError with source and line on any defect.
Trajectory ParseJsonlRecord(std::string_view line, std::string_view source,
                            std::size_t line_number);
std::string FormatJsonlRecord(const Trajectory& t);

// Blank lines are skipped. Duplicate ids are rejected.
std::vector<Trajectory> ReadJsonl(std::istream& in, std::string_view source);
// Columns trajectory_id, t, x, y and optionally heading, in any order, with
// a header row. Rows are grouped by id in order of first appearance and
// ordered by t within a trajectory.
std::vector<Trajectory> ReadCsv(std::istream& in, std::string_view source);

void WriteJsonl(std::ostream& out, std::span<const Trajectory> trajectories);
void WriteCsv(std::ostream& out, std::span<const Trajectory> trajectories);

std::vector<Trajectory> ReadDataset(const std::filesystem::path& path,
                                    Format format);
std::vector<Trajectory> ReadDataset(const std::filesystem::path& path);
void WriteDataset(std::span<const Trajectory> trajectories,
                  const std::filesystem::path& path, Format format);

// Flat JSON object with every report field. An infinite KL is written as
// the string "inf".
nlohmann::json ReportToJson(const PruneReport& report);
// Writes ReportToJson(report) merged with `extra` (run configuration).
void WriteReport(const PruneReport& report, const std::filesystem::path& path,
                 const nlohmann::json& extra = nlohmann::json::object());

// Histogram snapshot:
//
//   # cell_size=<d> heading_bins=<k>
//   # <key>=<value>          (zero or more metadata lines)
//   ix,iy,ia,count
//   <rows sorted by cell>
struct HistogramSnapshot {
  GridSpec grid;
  Histogram histogram;
  std::map<std::string, std::string> metadata;
};

void WriteHistogram(std::ostream& out, const HistogramSnapshot& snapshot);
void WriteHistogram(const HistogramSnapshot& snapshot,
                    const std::filesystem::path& path);
void WriteHistogram(const EntropyState& state, const GridSpec& grid,
                    const std::filesystem::path& path);
HistogramSnapshot ReadHistogram(std::istream& in, std::string_view source);
HistogramSnapshot ReadHistogram(const std::filesystem::path& path);

}  // namespace trajprune

#include "trajprune/dataset_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "trajprune/errors.h"

namespace trajprune {
namespace {

using nlohmann::json;

std::string Where(std::string_view source, std::size_t line) {
  return std::string(source) + ":" + std::to_string(line);
}

double NumberField(const json& value, const std::string& id, std::size_t point,
                   const char* field, const std::string& where) {
  if (!value.is_number()) {
    throw ValidationError(where + ": trajectory '" + id + "' point " +
                          std::to_string(point) + ": field " + field +
                          " is not a finite number");
  }
  const double v = value.get<double>();
  if (!std::isfinite(v)) {
    throw ValidationError(where + ": trajectory '" + id + "' point " +
                          std::to_string(point) + ": field " + field +
                          " is not a finite number");
  }
  return v;
}

void RejectDuplicates(const std::vector<Trajectory>& trajectories,
                      std::string_view source) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(trajectories.size());
  for (const Trajectory& t : trajectories) {
    if (!seen.insert(t.id).second) {
      throw ValidationError(std::string(source) + ": duplicate trajectory id '" +
                            t.id + "'");
    }
  }
}

std::vector<std::string_view> SplitCommas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool ParseDouble(std::string_view text, double& out) {
  text = Trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

template <typename Int>
bool ParseInt(std::string_view text, Int& out) {
  text = Trim(text);
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), out);
  return !text.empty() && ec == std::errc() && ptr == text.data() + text.size();
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream OpenForRead(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void FinishWrite(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

Format FormatFromPath(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".csv" ? Format::kCsv : Format::kJsonl;
}

Format ParseFormat(std::string_view name) {
  if (name == "jsonl") return Format::kJsonl;
  if (name == "csv") return Format::kCsv;
  throw ConfigError("unknown dataset format '" + std::string(name) +
                    "' (expected jsonl or csv)");
}

std::string FormatDouble(double value) {
  if (value == 0.0) return std::signbit(value) ? "-0.0" : "0";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Trajectory ParseJsonlRecord(std::string_view line, std::string_view source,
                            std::size_t line_number) {
  const std::string where = Where(source, line_number);
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(where + ": malformed record: " + e.what());
  }
  if (!record.is_object()) {
    throw ValidationError(where + ": record must be a JSON object");
  }

  Trajectory t;
  if (const auto it = record.find("id"); it != record.end()) {
    if (it->is_string()) {
      t.id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      t.id = it->dump();
    } else {
      throw ValidationError(where + ": id must be a string");
    }
  } else {
    t.id = std::string(source) + "#" + std::to_string(line_number);
  }

  const auto points = record.find("points");
  if (points == record.end() || !points->is_array()) {
    throw ValidationError(where + ": trajectory '" + t.id +
                          "' has no points array");
  }
  if (points->empty()) {
    throw ValidationError(where + ": trajectory '" + t.id + "' has no points");
  }
  t.points.reserve(points->size());
  std::size_t index = 0;
  for (const json& p : *points) {
    Waypoint w;
    if (p.is_array()) {
      if (p.size() < 2 || p.size() > 3) {
        throw ValidationError(where + ": trajectory '" + t.id + "' point " +
                              std::to_string(index) +
                              ": expected [x, y] or [x, y, heading]");
      }
      w.x = NumberField(p[0], t.id, index, "x", where);
      w.y = NumberField(p[1], t.id, index, "y", where);
      if (p.size() == 3) {
        w.heading = NumberField(p[2], t.id, index, "heading", where);
      }
    } else if (p.is_object()) {
      for (const char* key : {"x", "y"}) {
        if (!p.contains(key)) {
          throw ValidationError(where + ": trajectory '" + t.id + "' point " +
                                std::to_string(index) + ": missing field " +
                                key);
        }
      }
      w.x = NumberField(p["x"], t.id, index, "x", where);
      w.y = NumberField(p["y"], t.id, index, "y", where);
      if (p.contains("heading")) {
        w.heading = NumberField(p["heading"], t.id, index, "heading", where);
      }
    } else {
      throw ValidationError(where + ": trajectory '" + t.id + "' point " +
                            std::to_string(index) +
                            ": expected an array or object");
    }
    w.heading = NormalizeHeading(w.heading);
    t.points.push_back(w);
    ++index;
  }
  return t;
}

std::string FormatJsonlRecord(const Trajectory& t) {
  std::string out = "{\"id\":";
  out += json(t.id).dump();
  out += ",\"points\":[";
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    const Waypoint& w = t.points[i];
    if (i > 0) out += ',';
    out += '[';
    out += FormatDouble(w.x);
    out += ',';
    out += FormatDouble(w.y);
    out += ',';
    out += FormatDouble(w.heading);
    out += ']';
  }
  out += "]}";
  return out;
}

std::vector<Trajectory> ReadJsonl(std::istream& in, std::string_view source) {
  std::vector<Trajectory> trajectories;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    trajectories.push_back(ParseJsonlRecord(line, source, line_number));
  }
  RejectDuplicates(trajectories, source);
  return trajectories;
}

std::vector<Trajectory> ReadCsv(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_number = 0;
  // Header.
  while (std::getline(in, line)) {
    ++line_number;
    if (!Trim(line).empty()) break;
  }
  if (Trim(line).empty()) return {};
  int col_id = -1, col_t = -1, col_x = -1, col_y = -1, col_h = -1;
  const std::vector<std::string_view> header = SplitCommas(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string_view name = Trim(header[i]);
    const int c = static_cast<int>(i);
    if (name == "trajectory_id") col_id = c;
    else if (name == "t") col_t = c;
    else if (name == "x") col_x = c;
    else if (name == "y") col_y = c;
    else if (name == "heading") col_h = c;
  }
  if (col_id < 0 || col_t < 0 || col_x < 0 || col_y < 0) {
    throw ValidationError(Where(source, line_number) +
                          ": CSV header must contain trajectory_id, t, x, y");
  }

  struct Row {
    double t;
    Waypoint w;
  };
  std::vector<std::string> ids;
  std::vector<std::vector<Row>> rows;
  std::unordered_map<std::string, std::size_t> slot;

  while (std::getline(in, line)) {
    ++line_number;
    if (Trim(line).empty()) continue;
    const std::string where = Where(source, line_number);
    const std::vector<std::string_view> fields = SplitCommas(line);
    if (fields.size() != header.size()) {
      throw ValidationError(where + ": expected " +
                            std::to_string(header.size()) + " columns, got " +
                            std::to_string(fields.size()));
    }
    const std::string id(Trim(fields[col_id]));
    if (id.empty()) throw ValidationError(where + ": empty trajectory_id");
    Row row{};
    auto field = [&](int col, const char* name) {
      double v = 0.0;
      if (!ParseDouble(fields[col], v) || !std::isfinite(v)) {
        throw ValidationError(where + ": trajectory '" + id + "': field " +
                              name + " is not a finite number");
      }
      return v;
    };
    row.t = field(col_t, "t");
    row.w.x = field(col_x, "x");
    row.w.y = field(col_y, "y");
    if (col_h >= 0 && !Trim(fields[col_h]).empty()) {
      row.w.heading = NormalizeHeading(field(col_h, "heading"));
    }
    auto [it, inserted] = slot.try_emplace(id, ids.size());
    if (inserted) {
      ids.push_back(id);
      rows.emplace_back();
    }
    rows[it->second].push_back(row);
  }

  std::vector<Trajectory> trajectories(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::stable_sort(rows[i].begin(), rows[i].end(),
                     [](const Row& a, const Row& b) { return a.t < b.t; });
    trajectories[i].id = ids[i];
    trajectories[i].points.reserve(rows[i].size());
    for (const Row& r : rows[i]) trajectories[i].points.push_back(r.w);
  }
  return trajectories;
}

void WriteJsonl(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const Trajectory& t : trajectories) {
    out << FormatJsonlRecord(t) << '\n';
  }
}

void WriteCsv(std::ostream& out, std::span<const Trajectory> trajectories) {
  out << "trajectory_id,t,x,y,heading\n";
  for (const Trajectory& t : trajectories) {
    if (t.id.empty() || t.id.find_first_of(",\n\r\"") != std::string::npos) {
      throw ValidationError("trajectory id '" + t.id +
                            "' cannot be written to CSV");
    }
    for (std::size_t i = 0; i < t.points.size(); ++i) {
      const Waypoint& w = t.points[i];
      out << t.id << ',' << i << ',' << FormatDouble(w.x) << ','
          << FormatDouble(w.y) << ',' << FormatDouble(w.heading) << '\n';
    }
  }
}

std::vector<Trajectory> ReadDataset(const std::filesystem::path& path,
                                    Format format) {
  std::ifstream in = OpenForRead(path);
  const std::string source = path.filename().string();
  std::vector<Trajectory> trajectories = format == Format::kCsv
                                             ? ReadCsv(in, source)
                                             : ReadJsonl(in, source);
  if (in.bad()) throw IoError("read from '" + path.string() + "' failed");
  return trajectories;
}

std::vector<Trajectory> ReadDataset(const std::filesystem::path& path) {
  return ReadDataset(path, FormatFromPath(path));
}

void WriteDataset(std::span<const Trajectory> trajectories,
                  const std::filesystem::path& path, Format format) {
  std::ofstream out = OpenForWrite(path);
  if (format == Format::kCsv) {
    WriteCsv(out, trajectories);
  } else {
    WriteJsonl(out, trajectories);
  }
  FinishWrite(out, path);
}

nlohmann::json ReportToJson(const PruneReport& report) {
  json j = json::object();
  j["n_original"] = report.n_original;
  j["n_retained"] = report.n_retained;
  j["achieved_ratio"] = report.achieved_ratio;
  j["entropy_original"] = report.entropy_original;
  j["entropy_pruned"] = report.entropy_pruned;
  if (std::isinf(report.kl_original_vs_pruned)) {
    j["kl_original_vs_pruned"] = "inf";
  } else {
    j["kl_original_vs_pruned"] = report.kl_original_vs_pruned;
  }
  j["kl_epsilon"] = report.kl_epsilon;
  j["occupied_cells_original"] = report.occupied_cells_original;
  j["occupied_cells_pruned"] = report.occupied_cells_pruned;
  j["support_coverage"] = report.support_coverage;
  return j;
}

void WriteReport(const PruneReport& report, const std::filesystem::path& path,
                 const nlohmann::json& extra) {
  json j = ReportToJson(report);
  for (const auto& [key, value] : extra.items()) j[key] = value;
  std::ofstream out = OpenForWrite(path);
  out << j.dump(2) << '\n';
  FinishWrite(out, path);
}

void WriteHistogram(std::ostream& out, const HistogramSnapshot& snapshot) {
  out << "# cell_size=" << FormatDouble(snapshot.grid.cell_size)
      << " heading_bins=" << snapshot.grid.heading_bins << '\n';
  for (const auto& [key, value] : snapshot.metadata) {
    out << "# " << key << '=' << value << '\n';
  }
  out << "ix,iy,ia,count\n";
  for (const auto& [cell, count] : snapshot.histogram.SortedCells()) {
    out << cell.ix << ',' << cell.iy << ',' << cell.ia << ',' << count << '\n';
  }
}

void WriteHistogram(const HistogramSnapshot& snapshot,
                    const std::filesystem::path& path) {
  std::ofstream out = OpenForWrite(path);
  WriteHistogram(out, snapshot);
  FinishWrite(out, path);
}

void WriteHistogram(const EntropyState& state, const GridSpec& grid,
                    const std::filesystem::path& path) {
  WriteHistogram(HistogramSnapshot{grid, state.histogram(), {}}, path);
}

HistogramSnapshot ReadHistogram(std::istream& in, std::string_view source) {
  HistogramSnapshot snap;
  std::string line;
  std::size_t line_number = 0;
  bool have_grid = false;
  bool have_header = false;
  std::unordered_set<CellIndex, CellIndexHash> seen;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string where = Where(source, line_number);
    std::string_view text = Trim(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      if (have_header) {
        throw ValidationError(where + ": comment after the column header");
      }
      text.remove_prefix(1);
      text = Trim(text);
      if (!have_grid) {
        // "cell_size=<d> heading_bins=<k>"
        std::istringstream fields{std::string(text)};
        std::string token;
        bool cell = false, bins = false;
        while (fields >> token) {
          const std::size_t eq = token.find('=');
          if (eq == std::string::npos) continue;
          const std::string_view key(token.data(), eq);
          const std::string_view value(token.data() + eq + 1,
                                       token.size() - eq - 1);
          if (key == "cell_size") {
            cell = ParseDouble(value, snap.grid.cell_size);
          } else if (key == "heading_bins") {
            bins = ParseInt(value, snap.grid.heading_bins);
          }
        }
        if (!cell || !bins) {
          throw ValidationError(
              where + ": expected '# cell_size=<d> heading_bins=<k>'");
        }
        ValidateGrid(snap.grid);
        have_grid = true;
      } else {
        const std::size_t eq = text.find('=');
        if (eq == std::string_view::npos) {
          throw ValidationError(where + ": metadata must be key=value");
        }
        snap.metadata[std::string(Trim(text.substr(0, eq)))] =
            std::string(Trim(text.substr(eq + 1)));
      }
      continue;
    }
    if (!have_header) {
      if (!have_grid) {
        throw ValidationError(where + ": missing grid comment line");
      }
      if (text != "ix,iy,ia,count") {
        throw ValidationError(where + ": expected header 'ix,iy,ia,count'");
      }
      have_header = true;
      continue;
    }
    const std::vector<std::string_view> f = SplitCommas(text);
    CellIndex c;
    std::int64_t count = 0;
    if (f.size() != 4 || !ParseInt(f[0], c.ix) || !ParseInt(f[1], c.iy) ||
        !ParseInt(f[2], c.ia) || !ParseInt(f[3], count) || count <= 0) {
      throw ValidationError(where + ": malformed histogram row");
    }
    if (snap.grid.heading_bins == 0 ? c.ia != 0
                                    : (c.ia < 0 || c.ia >= snap.grid.heading_bins)) {
      throw ValidationError(where + ": heading bin out of range");
    }
    if (!seen.insert(c).second) {
      throw ValidationError(where + ": duplicate cell");
    }
    snap.histogram.Add(c, count);
  }
  if (!have_grid || !have_header) {
    throw ValidationError(std::string(source) + ": incomplete histogram snapshot");
  }
  return snap;
}

HistogramSnapshot ReadHistogram(const std::filesystem::path& path) {
  std::ifstream in = OpenForRead(path);
  return ReadHistogram(in, path.filename().string());
}

}  // namespace trajprune

#include "trajprune/cli.h"

#include <cmath>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "trajprune/dataset_io.h"
#include "trajprune/entropy.h"
#include "trajprune/errors.h"
#include "trajprune/pruning.h"
#include "trajprune/synthetic.h"

#include "CLI11.hpp"
#include "json.hpp"

namespace trajprune::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct GridFlags {
  double cell_size = 0.5;
  int heading_bins = 0;

  GridSpec Spec() const {
    GridSpec g{cell_size, heading_bins};
    try {
      ValidateGrid(g);
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("--cell-size/--heading-bins: ") + e.what());
    }
    return g;
  }
};

void AddGridFlags(CLI::App* app, GridFlags& g) {
  app->add_option("--cell-size", g.cell_size, "Grid cell size in meters")
      ->capture_default_str();
  app->add_option("--heading-bins", g.heading_bins,
                  "Heading bins (0 = 2D projection)")
      ->capture_default_str();
}

// Accepts "inf", "-inf" and anything strtod understands.
double ParseReal(const std::string& text, const char* flag) {
  const char* begin = text.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || std::isnan(v)) {
    throw ConfigError(std::string(flag) + ": '" + text + "' is not a number");
  }
  return v;
}

// "" or "0" -> 0, "auto" -> kAutoEpsilon, otherwise a value >= 0.
double ParseEpsilon(const std::string& text) {
  if (text == "auto") return kAutoEpsilon;
  const double eps = ParseReal(text, "--epsilon");
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw ConfigError("--epsilon must be 'auto' or a finite value >= 0");
  }
  return eps;
}

void CheckRatio(double ratio, const char* flag) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError(std::string(flag) +
                      " must lie in the open interval (0, 1)");
  }
}

std::string KlText(double kl) {
  return std::isinf(kl) ? std::string("inf") : FormatDouble(kl);
}

Format ResolveFormat(const std::string& flag, const fs::path& path) {
  return flag.empty() ? FormatFromPath(path) : ParseFormat(flag);
}

// ---------------------------------------------------------------- prune

struct PruneFlags {
  std::string input;
  std::string output;
  std::string format;
  std::string output_format;
  double ratio = std::numeric_limits<double>::quiet_NaN();
  std::string method = "entropy";
  GridFlags grid;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> initial_size;
  std::uint64_t seed = 0;
  std::string report;
  std::string ids_out;
  std::string epsilon = "0";
  int threads = 1;
};

void AddPrune(CLI::App& app, PruneFlags& f) {
  CLI::App* sub = app.add_subcommand("prune", "Prune a trajectory dataset");
  sub->add_option("--input", f.input, "Input dataset (.jsonl or .csv)")
      ->required();
  sub->add_option("--output", f.output, "Pruned dataset")->required();
  sub->add_option("--ratio", f.ratio, "Fraction of trajectories to remove")
      ->required();
  sub->add_option("--method", f.method, "entropy or random")
      ->check(CLI::IsMember({"entropy", "random"}))
      ->capture_default_str();
  AddGridFlags(sub, f.grid);
  sub->add_option("--batch-size", f.batch_size, "Candidates per batch");
  sub->add_option("--initial-size", f.initial_size, "Initial random subset");
  sub->add_option("--seed", f.seed, "Shuffle seed")->capture_default_str();
  sub->add_option("--report", f.report, "Write a JSON report here");
  sub->add_option("--ids-out", f.ids_out,
                  "Write retained ids in acceptance order, one per line");
  sub->add_option("--epsilon", f.epsilon,
                  "KL smoothing floor: 0 (none), auto, or a probability")
      ->capture_default_str();
  sub->add_option("--threads", f.threads, "Scoring threads")
      ->capture_default_str();
  sub->add_option("--format", f.format, "Input format override (jsonl|csv)");
  sub->add_option("--output-format", f.output_format,
                  "Output format override (jsonl|csv)");
}

PruneParams MakeParams(double ratio, const GridFlags& grid,
                       std::optional<std::size_t> batch_size,
                       std::optional<std::size_t> initial_size,
                       std::uint64_t seed, double epsilon, int threads) {
  PruneParams p;
  p.ratio = ratio;
  p.grid = grid.Spec();
  p.batch_size = batch_size;
  p.initial_size = initial_size;
  p.seed = seed;
  p.kl_epsilon = epsilon;
  p.threads = threads;
  if (threads < 1) throw ConfigError("--threads must be >= 1");
  return p;
}

PruneResult RunMethod(const std::string& method,
                      std::span<const Trajectory> data,
                      const PruneParams& params) {
  return method == "random" ? PruneRandom(data, params)
                            : PruneEntropy(data, params);
}

int CmdPrune(const PruneFlags& f, std::ostream& out) {
  CheckRatio(f.ratio, "--ratio");
  const double epsilon = ParseEpsilon(f.epsilon);
  const PruneParams params = MakeParams(f.ratio, f.grid, f.batch_size,
                                        f.initial_size, f.seed, epsilon,
                                        f.threads);
  const fs::path input(f.input);
  const std::vector<Trajectory> data =
      ReadDataset(input, ResolveFormat(f.format, input));
  const PruneResult result = RunMethod(f.method, data, params);

  std::unordered_set<std::string_view> keep(result.retained_ids.begin(),
                                            result.retained_ids.end());
  std::vector<Trajectory> pruned;
  pruned.reserve(keep.size());
  for (const Trajectory& t : data) {
    if (keep.contains(t.id)) pruned.push_back(t);
  }
  const fs::path output(f.output);
  WriteDataset(pruned, output, ResolveFormat(f.output_format, output));

  if (!f.ids_out.empty()) {
    std::ofstream ids(f.ids_out, std::ios::binary | std::ios::trunc);
    if (!ids) throw IoError("cannot open '" + f.ids_out + "' for writing");
    for (const std::string& id : result.retained_ids) ids << id << '\n';
    if (!ids) throw IoError("write to '" + f.ids_out + "' failed");
  }

  const PruneReport& r = result.report;
  if (!f.report.empty()) {
    json extra;
    extra["method"] = f.method;
    extra["ratio"] = f.ratio;
    extra["cell_size"] = params.grid.cell_size;
    extra["heading_bins"] = params.grid.heading_bins;
    extra["seed"] = f.seed;
    if (f.method == "entropy") {
      extra["batch_size"] = result.batch_size;
      extra["initial_size"] = result.initial_size;
    }
    WriteReport(r, f.report, extra);
  }

  out << "n=" << r.n_original << " n_p=" << r.n_retained
      << " achieved_ratio=" << std::fixed << std::setprecision(6)
      << r.achieved_ratio << std::defaultfloat
      << " H_before=" << FormatDouble(r.entropy_original)
      << " H_after=" << FormatDouble(r.entropy_pruned)
      << " KL=" << KlText(r.kl_original_vs_pruned) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- stats

struct StatsFlags {
  std::string input;
  std::string format;
  GridFlags grid;
  std::string histogram_out;
};

void AddStats(CLI::App& app, StatsFlags& f) {
  CLI::App* sub =
      app.add_subcommand("stats", "Trajectory distribution entropy of a file");
  sub->add_option("--input", f.input, "Input dataset")->required();
  AddGridFlags(sub, f.grid);
  sub->add_option("--histogram-out", f.histogram_out,
                  "Write the histogram snapshot here");
  sub->add_option("--format", f.format, "Input format override (jsonl|csv)");
}

int CmdStats(const StatsFlags& f, std::ostream& out) {
  const GridSpec grid = f.grid.Spec();
  const fs::path input(f.input);
  const std::vector<Trajectory> data =
      ReadDataset(input, ResolveFormat(f.format, input));
  ValidateDataset(data);
  const EntropyState state = BuildHistogram(data, grid);
  if (!f.histogram_out.empty()) WriteHistogram(state, grid, f.histogram_out);
  out << "n=" << data.size() << " points=" << state.total()
      << " occupied_cells=" << state.histogram().occupied()
      << " entropy=" << FormatDouble(state.Entropy()) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- compare

struct CompareFlags {
  std::string input;
  std::string format;
  std::string ratios;
  std::size_t seeds = 5;
  std::uint64_t seed = 0;
  GridFlags grid;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> initial_size;
  int threads = 1;
  std::string out;
};

void AddCompare(CLI::App& app, CompareFlags& f) {
  CLI::App* sub = app.add_subcommand(
      "compare", "Entropy vs random pruning over ratios and seeds");
  sub->add_option("--input", f.input, "Input dataset")->required();
  sub->add_option("--ratios", f.ratios, "Comma-separated ratios, e.g. 0.1,0.5")
      ->required();
  sub->add_option("--seeds", f.seeds, "Number of seeds per configuration")
      ->capture_default_str();
  sub->add_option("--seed", f.seed, "First seed")->capture_default_str();
  AddGridFlags(sub, f.grid);
  sub->add_option("--batch-size", f.batch_size, "Candidates per batch");
  sub->add_option("--initial-size", f.initial_size, "Initial random subset");
  sub->add_option("--threads", f.threads, "Scoring threads")
      ->capture_default_str();
  sub->add_option("--out", f.out, "Write machine-readable results (JSON)");
  sub->add_option("--format", f.format, "Input format override (jsonl|csv)");
}

std::vector<double> ParseRatios(const std::string& text) {
  std::vector<double> ratios;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const double r = ParseReal(item, "--ratios");
    CheckRatio(r, "--ratios");
    ratios.push_back(r);
  }
  if (ratios.empty()) throw ConfigError("--ratios must list at least one ratio");
  return ratios;
}

int CmdCompare(const CompareFlags& f, std::ostream& out) {
  const std::vector<double> ratios = ParseRatios(f.ratios);
  if (f.seeds == 0) throw ConfigError("--seeds must be >= 1");
  const fs::path input(f.input);
  const std::vector<Trajectory> data =
      ReadDataset(input, ResolveFormat(f.format, input));

  json doc;
  doc["input"] = f.input;
  doc["cell_size"] = f.grid.cell_size;
  doc["heading_bins"] = f.grid.heading_bins;
  doc["seeds"] = json::array();
  for (std::size_t s = 0; s < f.seeds; ++s) doc["seeds"].push_back(f.seed + s);
  doc["rows"] = json::array();

  out << std::left << std::setw(7) << "ratio";
  for (const char* m : {"entropy", "random"}) {
    const std::string p = m;
    out << std::setw(14) << ("H_" + p) << std::setw(13) << ("inf_" + p)
        << std::setw(14) << ("KLs_" + p) << std::setw(14) << ("cov_" + p);
  }
  out << '\n';

  for (const double ratio : ratios) {
    json row;
    row["ratio"] = ratio;
    out << std::left << std::setw(7) << ratio;
    for (const std::string method : {"entropy", "random"}) {
      double h_sum = 0.0, kls_sum = 0.0, cov_sum = 0.0;
      std::size_t inf_count = 0;
      json runs = json::array();
      for (std::size_t s = 0; s < f.seeds; ++s) {
        const PruneParams params =
            MakeParams(ratio, f.grid, f.batch_size, f.initial_size,
                       f.seed + s, 0.0, f.threads);
        const PruneResult result = RunMethod(method, data, params);
        const PruneReport smoothed =
            Evaluate(data, result.retained_ids, params.grid, kAutoEpsilon);
        const PruneReport& r = result.report;
        h_sum += r.entropy_pruned;
        cov_sum += r.support_coverage;
        kls_sum += smoothed.kl_original_vs_pruned;
        if (std::isinf(r.kl_original_vs_pruned)) ++inf_count;
        json run = ReportToJson(r);
        run["seed"] = f.seed + s;
        run["kl_smoothed"] = smoothed.kl_original_vs_pruned;
        run["kl_smoothed_epsilon"] = smoothed.kl_epsilon;
        runs.push_back(run);
      }
      const double k = static_cast<double>(f.seeds);
      json summary;
      summary["entropy_pruned_mean"] = h_sum / k;
      summary["kl_inf_rate"] = static_cast<double>(inf_count) / k;
      summary["kl_smoothed_mean"] = kls_sum / k;
      summary["support_coverage_mean"] = cov_sum / k;
      summary["runs"] = runs;
      row[method] = summary;
      out << std::setw(14) << std::setprecision(6) << h_sum / k
          << std::setw(13) << static_cast<double>(inf_count) / k
          << std::setw(14) << kls_sum / k << std::setw(14) << cov_sum / k;
    }
    out << '\n';
    doc["rows"].push_back(row);
  }

  if (!f.out.empty()) {
    std::ofstream file(f.out, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + f.out + "' for writing");
    file << doc.dump(2) << '\n';
    if (!file) throw IoError("write to '" + f.out + "' failed");
  }
  return kOk;
}

// ---------------------------------------------------------------- gen

struct GenFlags {
  SyntheticSpec spec;
  std::string mix = "stationary=0.4,straight=0.5,turns=0.1";
  std::string output;
  std::string format;
};

void AddGen(CLI::App& app, GenFlags& f) {
  CLI::App* sub = app.add_subcommand("gen", "Generate a synthetic dataset");
  sub->add_option("--count", f.spec.count, "Number of trajectories")
      ->capture_default_str();
  sub->add_option("--mix", f.mix,
                  "Category weights: stationary, straight, left_turn, "
                  "right_turn, turns")
      ->capture_default_str();
  sub->add_option("--points", f.spec.points_per_trajectory,
                  "Waypoints per trajectory")
      ->capture_default_str();
  sub->add_option("--time-step", f.spec.time_step, "Seconds between waypoints")
      ->capture_default_str();
  sub->add_option("--speed-min", f.spec.speed_min)->capture_default_str();
  sub->add_option("--speed-max", f.spec.speed_max)->capture_default_str();
  sub->add_option("--radius-min", f.spec.turn_radius_min)
      ->capture_default_str();
  sub->add_option("--radius-max", f.spec.turn_radius_max)
      ->capture_default_str();
  sub->add_option("--noise", f.spec.noise_std, "Position noise std (m)")
      ->capture_default_str();
  sub->add_option("--seed", f.spec.seed)->capture_default_str();
  sub->add_option("--output", f.output, "Output dataset")->required();
  sub->add_option("--format", f.format, "Output format override (jsonl|csv)");
}

int CmdGen(GenFlags f, std::ostream& out) {
  f.spec.mix = ParseMix(f.mix);
  const std::vector<Trajectory> data = GenerateSynthetic(f.spec);
  const fs::path output(f.output);
  WriteDataset(data, output, ResolveFormat(f.format, output));
  const auto counts = CategoryCounts(f.spec.count, f.spec.mix);
  out << "wrote " << data.size() << " trajectories to " << f.output << " (";
  for (std::size_t i = 0; i < kMotionCount; ++i) {
    if (i > 0) out << ' ';
    out << MotionName(static_cast<Motion>(i)) << '=' << counts[i];
  }
  out << ")\n";
  return kOk;
}

// ---------------------------------------------------------------- filter

struct FilterFlags {
  std::string state;
  std::string policy = "threshold";
  std::string threshold = "0";
  double keep_fraction = 0.6;
  std::size_t window = 256;
  GridFlags grid;
  bool verbose = false;
};

void AddFilter(CLI::App& app, FilterFlags& f) {
  CLI::App* sub = app.add_subcommand(
      "filter", "Stream JSONL from stdin, echo accepted records to stdout");
  sub->add_option("--state", f.state,
                  "Histogram snapshot to resume from and save to");
  sub->add_option("--policy", f.policy, "threshold or top-fraction")
      ->check(CLI::IsMember({"threshold", "top-fraction"}))
      ->capture_default_str();
  sub->add_option("--threshold", f.threshold,
                  "Minimum entropy gain in nats (use --threshold=-inf to "
                  "accept everything)")
      ->capture_default_str();
  sub->add_option("--keep-fraction", f.keep_fraction,
                  "Target accepted fraction (top-fraction policy)")
      ->capture_default_str();
  sub->add_option("--window", f.window, "Rolling window of recent gains")
      ->capture_default_str();
  AddGridFlags(sub, f.grid);
  sub->add_flag("--verbose", f.verbose, "Per-record decisions on stderr");
}

constexpr const char* kGainsKey = "recent_gains";
constexpr const char* kSeenKey = "records_seen";
constexpr const char* kAcceptedKey = "records_accepted";

std::string JoinGains(const std::deque<double>& gains) {
  std::string s;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (i > 0) s += ';';
    s += FormatDouble(gains[i]);
  }
  return s;
}

std::deque<double> SplitGains(const std::string& text) {
  std::deque<double> gains;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (!item.empty()) gains.push_back(ParseReal(item, kGainsKey));
  }
  return gains;
}

int CmdFilter(const FilterFlags& f, std::istream& in, std::ostream& out,
              std::ostream& err) {
  FilterPolicy policy;
  if (f.policy == "top-fraction") {
    policy.mode = FilterPolicy::Mode::kTopFraction;
    policy.keep_fraction = f.keep_fraction;
    policy.window = f.window;
  } else {
    policy.mode = FilterPolicy::Mode::kThreshold;
    policy.threshold = ParseReal(f.threshold, "--threshold");
  }
  ValidatePolicy(policy);
  const GridSpec grid = f.grid.Spec();

  EntropyState state;
  std::deque<double> gains;
  std::uint64_t seen = 0;
  std::uint64_t accepted = 0;
  if (!f.state.empty() && fs::exists(f.state)) {
    HistogramSnapshot snap = ReadHistogram(fs::path(f.state));
    if (!(snap.grid == grid)) {
      throw ConfigError("--state grid (cell_size=" +
                        FormatDouble(snap.grid.cell_size) + " heading_bins=" +
                        std::to_string(snap.grid.heading_bins) +
                        ") differs from the requested grid");
    }
    state = EntropyState(std::move(snap.histogram));
    if (const auto it = snap.metadata.find(kGainsKey);
        it != snap.metadata.end() &&
        policy.mode == FilterPolicy::Mode::kTopFraction) {
      gains = SplitGains(it->second);
    }
    if (const auto it = snap.metadata.find(kSeenKey); it != snap.metadata.end()) {
      seen = std::stoull(it->second);
    }
    if (const auto it = snap.metadata.find(kAcceptedKey);
        it != snap.metadata.end()) {
      accepted = std::stoull(it->second);
    }
  }

  StreamFilter filter(policy, grid, std::move(state), std::move(gains));
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const Trajectory t = ParseJsonlRecord(line, "<stdin>", line_number);
    const StreamFilter::Decision d = filter.Step(t);
    ++seen;
    if (d.accepted) {
      ++accepted;
      out << line << '\n';
    }
    if (f.verbose) {
      err << (d.accepted ? "accept " : "reject ") << t.id
          << " dH=" << FormatDouble(d.entropy_gain) << '\n';
    }
  }
  out.flush();

  if (!f.state.empty()) {
    HistogramSnapshot snap{grid, filter.state().histogram(), {}};
    snap.metadata["policy"] = f.policy;
    snap.metadata[kSeenKey] = std::to_string(seen);
    snap.metadata[kAcceptedKey] = std::to_string(accepted);
    if (policy.mode == FilterPolicy::Mode::kTopFraction) {
      snap.metadata[kGainsKey] = JoinGains(filter.recent_gains());
    }
    WriteHistogram(snap, fs::path(f.state));
  }
  return kOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::istream& in, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Entropy-maximizing trajectory dataset pruning", "trajprune"};
  app.require_subcommand(1);

  PruneFlags prune;
  StatsFlags stats;
  CompareFlags compare;
  GenFlags gen;
  FilterFlags filter;
  AddPrune(app, prune);
  AddStats(app, stats);
  AddCompare(app, compare);
  AddGen(app, gen);
  AddFilter(app, filter);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  try {
    if (app.got_subcommand("prune")) return CmdPrune(prune, out);
    if (app.got_subcommand("stats")) return CmdStats(stats, out);
    if (app.got_subcommand("compare")) return CmdCompare(compare, out);
    if (app.got_subcommand("gen")) return CmdGen(gen, out);
    if (app.got_subcommand("filter")) return CmdFilter(filter, in, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

int Run(const std::vector<std::string>& args, std::istream& in,
        std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("trajprune");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data(), in, out, err);
}

}  // namespace trajprune::cli

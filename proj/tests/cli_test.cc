#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "trajprune/cli.h"
#include "trajprune/dataset_io.h"
#include "trajprune/entropy.h"
#include "trajprune/pruning.h"
#include "trajprune/synthetic.h"
#include "json.hpp"

using namespace trajprune;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome RunCli(const std::vector<std::string>& args,
               const std::string& stdin_text = "") {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  const int code = cli::Run(args, in, out, err);
  return {code, out.str(), err.str()};
}

fs::path Temp(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "trajprune_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

std::string GenDataset(const std::string& name, std::size_t count,
                       std::uint64_t seed = 0) {
  const std::string path = Temp(name).string();
  const auto r = RunCli({"gen", "--count", std::to_string(count), "--seed",
                         std::to_string(seed), "--output", path});
  REQUIRE(r.code == 0);
  return path;
}

double Field(const std::string& line, const std::string& key) {
  const auto pos = line.find(key + "=");
  REQUIRE(pos != std::string::npos);
  return std::stod(line.substr(pos + key.size() + 1));
}

std::string Lines(const std::vector<Trajectory>& data) {
  std::string s;
  for (const auto& t : data) s += FormatJsonlRecord(t) + "\n";
  return s;
}

}  // namespace

TEST_CASE("prune keeps the requested number of trajectories") {
  const std::string in = GenDataset("p1000.jsonl", 1000);
  const std::string out = Temp("p1000_out.jsonl").string();
  const std::string report = Temp("p1000_report.json").string();
  for (const std::string method : {"entropy", "random"}) {
    const auto r = RunCli({"prune", "--input", in, "--output", out, "--ratio",
                           "0.4", "--method", method, "--report", report});
    REQUIRE(r.code == 0);
    CHECK(ReadDataset(out).size() == 600);
    CHECK(Field(r.out, "n_p") == 600);
    const auto j = nlohmann::json::parse(Slurp(report));
    CHECK(j["n_retained"] == 600);
    CHECK(j["method"] == method);
    CHECK(j["achieved_ratio"].get<double>() == doctest::Approx(0.4));
  }
}

TEST_CASE("prune output preserves file order and is a subset") {
  const std::string in = GenDataset("order.jsonl", 300, 3);
  const std::string out = Temp("order_out.jsonl").string();
  REQUIRE(RunCli({"prune", "--input", in, "--output", out, "--ratio", "0.5"})
              .code == 0);
  const auto original = ReadDataset(in);
  const auto pruned = ReadDataset(out);
  std::size_t j = 0;
  for (const auto& t : original) {
    if (j < pruned.size() && pruned[j] == t) ++j;
  }
  CHECK(j == pruned.size());
}

TEST_CASE("invalid ratio is a usage error naming the flag") {
  const std::string in = GenDataset("bad.jsonl", 10);
  for (const std::string ratio : {"1.5", "1", "-0.1", "nan"}) {
    const auto r = RunCli({"prune", "--input", in, "--output",
                           Temp("bad_out.jsonl").string(), "--ratio", ratio});
    CHECK(r.code == 1);
    CHECK(r.err.find("--ratio") != std::string::npos);
  }
}

TEST_CASE("prune is reproducible for a fixed seed") {
  const std::string in = GenDataset("repro.jsonl", 2000, 11);
  std::vector<std::string> outputs, ids;
  for (const std::string threads : {"1", "3", "1"}) {
    const std::string out = Temp("repro_out_" + threads + ".jsonl").string();
    const std::string id_file = Temp("repro_ids_" + threads + ".txt").string();
    REQUIRE(RunCli({"prune", "--input", in, "--output", out, "--ratio", "0.3",
                    "--seed", "7", "--threads", threads, "--ids-out", id_file})
                .code == 0);
    outputs.push_back(Slurp(out));
    ids.push_back(Slurp(id_file));
  }
  CHECK(outputs[0] == outputs[1]);
  CHECK(outputs[0] == outputs[2]);
  CHECK(ids[0] == ids[1]);
  CHECK(ids[0] == ids[2]);
}

TEST_CASE("stats on hand-made datasets") {
  const std::string single = Temp("single.jsonl").string();
  WriteDataset(std::vector<Trajectory>{{"s", std::vector<Waypoint>(4)}}, single,
               Format::kJsonl);
  auto r = RunCli({"stats", "--input", single});
  REQUIRE(r.code == 0);
  CHECK(Field(r.out, "entropy") == 0.0);
  CHECK(Field(r.out, "occupied_cells") == 1);

  const std::string two = Temp("two.jsonl").string();
  WriteDataset(std::vector<Trajectory>{{"a", {{0, 0, 0}, {0.1, 0, 0}}},
                                       {"b", {{10, 0, 0}, {10.1, 0, 0}}}},
               two, Format::kJsonl);
  r = RunCli({"stats", "--input", two});
  REQUIRE(r.code == 0);
  CHECK(Field(r.out, "entropy") == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("stats agrees with the library and writes a snapshot") {
  const std::string in = GenDataset("stats.jsonl", 500, 4);
  const std::string snap = Temp("stats_hist.csv").string();
  const auto r = RunCli({"stats", "--input", in, "--cell-size", "1.0",
                         "--heading-bins", "8", "--histogram-out", snap});
  REQUIRE(r.code == 0);
  const GridSpec grid{1.0, 8};
  const EntropyState state = BuildHistogram(ReadDataset(in), grid);
  CHECK(Field(r.out, "entropy") == state.Entropy());
  const HistogramSnapshot back = ReadHistogram(snap);
  CHECK(back.grid == grid);
  CHECK(back.histogram == state.histogram());
}

TEST_CASE("pruned output fed to stats reproduces H_after") {
  const std::string in = GenDataset("pipe.jsonl", 1500, 8);
  const std::string out = Temp("pipe_out.csv").string();
  const auto p = RunCli(
      {"prune", "--input", in, "--output", out, "--ratio", "0.5"});
  REQUIRE(p.code == 0);
  const auto s = RunCli({"stats", "--input", out});
  REQUIRE(s.code == 0);
  CHECK(std::abs(Field(p.out, "H_after") - Field(s.out, "entropy")) <= 1e-9);
}

TEST_CASE("compare") {
  const std::string in = GenDataset("cmp.jsonl", 1000, 2);
  const std::string json_out = Temp("cmp.json").string();
  const auto r = RunCli({"compare", "--input", in, "--ratios", "0.2,0.5",
                         "--seeds", "3", "--out", json_out});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(Slurp(json_out));
  REQUIRE(doc["rows"].size() == 2);
  for (const auto& row : doc["rows"]) {
    CHECK(row["entropy"]["support_coverage_mean"].get<double>() >=
          row["random"]["support_coverage_mean"].get<double>());
    CHECK(row["entropy"]["entropy_pruned_mean"].get<double>() >
          row["random"]["entropy_pruned_mean"].get<double>());
    CHECK(row["entropy"]["runs"].size() == 3);
  }

  SUBCASE("matches prune for one ratio and seed") {
    const std::string single = Temp("cmp1.json").string();
    REQUIRE(RunCli({"compare", "--input", in, "--ratios", "0.5", "--seeds",
                    "1", "--seed", "9", "--out", single})
                .code == 0);
    const auto one = nlohmann::json::parse(Slurp(single));
    const std::string report = Temp("cmp1_report.json").string();
    REQUIRE(RunCli({"prune", "--input", in, "--output",
                    Temp("cmp1_out.jsonl").string(), "--ratio", "0.5",
                    "--seed", "9", "--report", report})
                .code == 0);
    const auto rep = nlohmann::json::parse(Slurp(report));
    const auto& run = one["rows"][0]["entropy"]["runs"][0];
    CHECK(run["entropy_pruned"] == rep["entropy_pruned"]);
    CHECK(run["n_retained"] == rep["n_retained"]);
    CHECK(run["support_coverage"] == rep["support_coverage"]);
  }

  CHECK(RunCli({"compare", "--input", in, "--ratios", "0,0.5"}).code == 1);
  CHECK(RunCli({"compare", "--input", in, "--ratios", "0.5", "--seeds", "0"})
            .code == 1);
}

TEST_CASE("gen") {
  const std::string a = Temp("gen_a.jsonl").string();
  const std::string b = Temp("gen_b.jsonl").string();
  const std::vector<std::string> args = {
      "gen", "--count", "100", "--mix", "stationary=0.5,straight=0.5",
      "--seed", "3", "--output"};
  auto with = [&](const std::string& path) {
    auto v = args;
    v.push_back(path);
    return v;
  };
  REQUIRE(RunCli(with(a)).code == 0);
  REQUIRE(RunCli(with(b)).code == 0);
  CHECK(Slurp(a) == Slurp(b));
  std::size_t stationary = 0, straight = 0;
  for (const auto& t : ReadDataset(a)) {
    const Motion m = *MotionFromId(t.id);
    stationary += m == Motion::kStationary;
    straight += m == Motion::kStraight;
  }
  CHECK(stationary == 50);
  CHECK(straight == 50);

  const auto bad = RunCli({"gen", "--count", "10", "--mix",
                           "stationary=0.5,straight=0.3", "--output", a});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("mix") != std::string::npos);

  const std::string csv = Temp("gen.csv").string();
  REQUIRE(RunCli({"gen", "--count", "20", "--output", csv}).code == 0);
  CHECK(Slurp(csv).rfind("trajectory_id,t,x,y,heading\n", 0) == 0);
}

TEST_CASE("filter") {
  SyntheticSpec spec;
  spec.count = 400;
  spec.seed = 12;
  const auto stream = GenerateSynthetic(spec);
  const std::string text = Lines(stream);

  SUBCASE("threshold -inf echoes every record") {
    const auto r = RunCli({"filter", "--threshold=-inf"}, text);
    REQUIRE(r.code == 0);
    CHECK(r.out == text);
  }

  SUBCASE("duplicate stream: prefix accepted, then rejected") {
    const std::string line = FormatJsonlRecord(stream[1]) + "\n";
    std::string dup;
    for (int i = 0; i < 50; ++i) dup += line;
    const auto r = RunCli({"filter", "--threshold", "0"}, dup);
    REQUIRE(r.code == 0);
    CHECK_FALSE(r.out.empty());
    CHECK(r.out.size() < dup.size());
    CHECK(dup.rfind(r.out, 0) == 0);
  }

  SUBCASE("resumed run equals an uninterrupted run") {
    for (const std::vector<std::string> policy :
         {std::vector<std::string>{"--threshold", "0.0001"},
          std::vector<std::string>{"--policy", "top-fraction",
                                   "--keep-fraction", "0.4", "--window",
                                   "32"}}) {
      const fs::path whole_state = Temp("whole_state.csv");
      const fs::path split_state = Temp("split_state.csv");
      fs::remove(whole_state);
      fs::remove(split_state);
      auto args = [&](const fs::path& state) {
        std::vector<std::string> v = {"filter", "--state", state.string()};
        v.insert(v.end(), policy.begin(), policy.end());
        return v;
      };
      const auto whole = RunCli(args(whole_state), text);
      REQUIRE(whole.code == 0);

      const std::string head = Lines({stream.begin(), stream.begin() + 137});
      const std::string tail = Lines({stream.begin() + 137, stream.end()});
      const auto first = RunCli(args(split_state), head);
      const auto second = RunCli(args(split_state), tail);
      REQUIRE(first.code == 0);
      REQUIRE(second.code == 0);
      CHECK(first.out + second.out == whole.out);
      CHECK(ReadHistogram(split_state).histogram ==
            ReadHistogram(whole_state).histogram);
    }
  }

  SUBCASE("grid mismatch with a saved state is rejected") {
    const fs::path state = Temp("mismatch_state.csv");
    fs::remove(state);
    REQUIRE(RunCli({"filter", "--state", state.string()}, text).code == 0);
    CHECK(RunCli({"filter", "--state", state.string(), "--cell-size", "2"},
                 text)
              .code == 1);
  }

  SUBCASE("malformed record") {
    const auto r = RunCli({"filter"}, "{\"id\":\"x\",\"points\":[[1,\"a\"]]}\n");
    CHECK(r.code == 1);
    CHECK(r.err.find("'x'") != std::string::npos);
  }
}

TEST_CASE("missing input file is an I/O error") {
  const auto r = RunCli({"stats", "--input", "/nonexistent/nope.jsonl"});
  CHECK(r.code == 2);
  CHECK(r.err.find("/nonexistent/nope.jsonl") != std::string::npos);
  CHECK(RunCli({"prune", "--input", "/nonexistent/nope.jsonl", "--output",
                Temp("x.jsonl").string(), "--ratio", "0.5"})
            .code == 2);
}

TEST_CASE("usage errors") {
  CHECK(RunCli({}).code == 1);
  CHECK(RunCli({"bogus"}).code == 1);
  CHECK(RunCli({"prune", "--input", "x.jsonl"}).code == 1);
  CHECK(RunCli({"--help"}).code == 0);
}

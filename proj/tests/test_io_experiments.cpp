#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "fwlb/experiments.hpp"
#include "fwlb/io.hpp"

using namespace fwlb;
using experiments::Command;
using experiments::ExperimentConfig;

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("fwlb_test_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

io::json summary(const fs::path& out, const std::string& stem) { return io::json::parse(slurp(out / (stem + "_summary.json"))); }

}  // namespace

TEST_CASE("csv quoting") {
  std::ostringstream os;
  io::CsvWriter w(os);
  w.row({"a", "b,c", "d\"e", "x\ny", ""});
  CHECK(os.str() == "a,\"b,c\",\"d\"\"e\",\"x\ny\",\n");
}

TEST_CASE("format_double round trips") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> e(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(u(rng), e(rng));
    REQUIRE(std::strtod(io::format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("precision resolution") {
  ExperimentConfig cfg;
  CHECK_FALSE(experiments::resolve_precision(cfg, 0).is_extended());
  CHECK(experiments::resolve_precision(cfg, 300).bits() == 300);
  cfg.precision_bits = 53;
  CHECK_FALSE(experiments::resolve_precision(cfg, 300).is_extended());
  cfg.precision_bits = 128;
  CHECK(experiments::resolve_precision(cfg, 0).is_extended());
  CHECK(experiments::resolve_precision(cfg, 0).bits() == 128);
}

TEST_CASE("run writes gap files and reruns are byte-identical") {
  TempDir a("run_a"), b("run_b");
  ExperimentConfig cfg;
  cfg.command = Command::Run;
  cfg.horizon = 300;
  cfg.starts = 2;
  cfg.seed = 42;
  cfg.out = a.path;
  const auto res = experiments::run_command(cfg);
  CHECK(res.exit_code == 0);
  for (const char* regime : {"boundary", "interior", "exterior"}) {
    for (int k = 0; k < 2; ++k) {
      const std::string stem = std::string(regime) + "_" + std::to_string(k);
      REQUIRE(fs::exists(a.path / "rates" / (stem + ".csv")));
      REQUIRE(fs::exists(a.path / "rates" / (stem + "_traj.csv")));
      CHECK(lines(a.path / "rates" / (stem + ".csv")).front() == "t,gap");
      CHECK(lines(a.path / "rates" / (stem + "_traj.csv")).front() == "t,r,theta,s,gamma,gap");
    }
  }
  const auto j = summary(a.path, "run");
  CHECK(j["runs"].size() == 6);
  CHECK(j["exit_code"] == 0);

  cfg.out = b.path;
  experiments::run_command(cfg);
  for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a.path);
    REQUIRE(slurp(entry.path()) == slurp(b.path / rel));
  }
}

TEST_CASE("run from p stops at once with zero gap") {
  TempDir d("run_p");
  ExperimentConfig cfg;
  cfg.command = Command::Run;
  cfg.regime = "boundary";
  cfg.x0 = {0.0, 1.0};
  cfg.horizon = 50;
  cfg.out = d.path;
  CHECK(experiments::run_command(cfg).exit_code == 0);
  const auto rows = lines(d.path / "rates" / "boundary_0.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == "0,0");

  cfg.x0 = {0.0, 1.0, 0.0};
  CHECK_THROWS_AS(experiments::run_command(cfg), InvalidArgument);
}

TEST_CASE("csv summary format") {
  TempDir d("fmt");
  ExperimentConfig cfg;
  cfg.command = Command::Gridsearch;
  cfg.grid_n = 11;
  cfg.cap = 50;
  cfg.format = experiments::Format::Csv;
  cfg.out = d.path;
  experiments::run_command(cfg);
  REQUIRE(fs::exists(d.path / "gridsearch_summary.csv"));
  CHECK_FALSE(fs::exists(d.path / "gridsearch_summary.json"));
  CHECK(lines(d.path / "gridsearch_summary.csv").front() == "key,value");
  const auto rows = lines(d.path / "gridsearch.csv");
  CHECK(rows.size() == 12);
  CHECK(rows.front() == "s0,tau");
}

TEST_CASE("worstcase with T = 0 emits the endpoint only") {
  TempDir d("wc0");
  ExperimentConfig cfg;
  cfg.command = Command::Worstcase;
  cfg.horizon = 0;
  cfg.out = d.path;
  const auto res = experiments::run_command(cfg);
  CHECK(res.exit_code == 0);
  CHECK(lines(d.path / "backward.csv").size() == 2);
  CHECK(lines(d.path / "replay.csv").size() == 2);
  CHECK(fs::exists(d.path / "certificate.json"));
  CHECK(fs::exists(d.path / "semicircle.csv"));
}

TEST_CASE("worstcase at T = 100 certifies") {
  TempDir d("wc100");
  ExperimentConfig cfg;
  cfg.command = Command::Worstcase;
  cfg.horizon = 100;
  cfg.out = d.path;
  CHECK(experiments::run_command(cfg).exit_code == 0);
  const auto cert = io::json::parse(slurp(d.path / "certificate.json"));
  CHECK(cert.is_object());
  CHECK(lines(d.path / "replay.csv").size() == 102);
  CHECK(lines(d.path / "backward.csv").front() == "t,r,s");
}

TEST_CASE("phase curves have grid_n rows") {
  TempDir d("phase");
  ExperimentConfig cfg;
  cfg.command = Command::Phase;
  cfg.horizon = 50;
  cfg.grid_n = 3;
  cfg.out = d.path;
  experiments::run_command(cfg);
  for (const char* f : {"curve_sbar.csv", "curve_g.csv", "curve_affine.csv"}) {
    const auto rows = lines(d.path / f);
    CHECK(rows.size() == 4);
    CHECK(rows.front() == "r,s");
  }
  CHECK(fs::exists(d.path / "phase_trace.csv"));
}

TEST_CASE("heatmap corner cases") {
  TempDir d("heat");
  ExperimentConfig cfg;
  cfg.command = Command::Heatmap;
  cfg.grid_n = 3;
  cfg.out = d.path;
  for (int bits : {53, 128}) {
    cfg.precision_bits = bits;
    CHECK(experiments::run_command(cfg).exit_code == 0);
    const auto rows = lines(d.path / "heatmap.csv");
    REQUIRE(rows.size() == 6);  // header plus the five grid points in the disk
    std::map<std::string, std::string> iters;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto c = rows[i].rfind(',');
      iters[rows[i].substr(0, c)] = rows[i].substr(c + 1);
    }
    CHECK(iters.at("0,1") == "0");   // p itself
    CHECK(iters.at("0,-1") == "1");  // collinear with p
    CHECK(iters.at("0,0") == "1");
  }
}

TEST_CASE("bisect summary and trace") {
  TempDir d("bis");
  ExperimentConfig cfg;
  cfg.command = Command::Bisect;
  cfg.iters = 5;
  cfg.out = d.path;
  experiments::run_command(cfg);
  const auto j = summary(d.path, "bisect");
  const std::size_t tau = j["tau"];
  CHECK(lines(d.path / "bisect_trace.csv").size() == tau + 3);
}

TEST_CASE("verify numeric suite passes") {
  TempDir d("ver");
  ExperimentConfig cfg;
  cfg.command = Command::Verify;
  cfg.suites = {"numeric"};
  cfg.out = d.path;
  CHECK(experiments::run_command(cfg).exit_code == 0);
}

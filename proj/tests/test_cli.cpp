#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(GRIDMON_BIN) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string output;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe))
    output.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, output};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gridmon-cli-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Two hours is enough for every window method to produce differences.
const char* kShortScenario = R"({
  "seed": 5,
  "start": "2023-01-01T00:00:00Z",
  "duration_s": 7200,
  "plugs": [{"device_id": "p", "bus": "741", "offset_v": 2.5, "phase_s": 3}],
  "references": [{"device_id": "r", "bus": "741", "cadence_s": 60}],
  "loads": {"random_walk": {}}
})";

}  // namespace

TEST_CASE("grid subcommands inspect the built-in feeder") {
  const RunResult v = run("grid validate");
  CHECK(v.exit_code == 0);
  CHECK(v.output.find("37 buses") != std::string::npos);

  const RunResult s = run("grid show");
  CHECK(s.exit_code == 0);
  CHECK(s.output.find("slack 799") != std::string::npos);
  CHECK(s.output.find("799,701,40") != std::string::npos);
}

TEST_CASE("simulate is deterministic and calibrate recovers the offset") {
  TempDir tmp;
  const fs::path scenario = tmp.path / "scenario.json";
  std::ofstream(scenario) << kShortScenario;

  const std::string base =
      "simulate --scenario " + scenario.string() + " --out ";
  REQUIRE(run(base + (tmp.path / "a.csv").string()).exit_code == 0);
  REQUIRE(run(base + (tmp.path / "b.csv").string()).exit_code == 0);
  CHECK(slurp(tmp.path / "a.csv") == slurp(tmp.path / "b.csv"));

  const RunResult seeded =
      run("simulate --scenario " + scenario.string() + " --seed 6 --out " +
          (tmp.path / "c.csv").string());
  REQUIRE(seeded.exit_code == 0);
  CHECK(slurp(tmp.path / "a.csv") != slurp(tmp.path / "c.csv"));

  const std::string meas = (tmp.path / "a.csv").string();
  const RunResult cal = run("calibrate --plug meas:" + meas + ":p --ref meas:" + meas +
                            ":r --method last");
  CHECK(cal.exit_code == 0);
  CHECK(cal.output.find("method,n,offset_v") != std::string::npos);

  // The configured 2.5 V offset must survive the whole pipeline.
  const auto row = cal.output.find("\nlast,");
  REQUIRE(row != std::string::npos);
  int n = 0;
  double offset = 0.0;
  REQUIRE(std::sscanf(cal.output.c_str() + row, "\nlast,%d,%lf", &n, &offset) == 2);
  CHECK(n > 100);
  CHECK(offset == doctest::Approx(2.5).epsilon(0.05));
}

TEST_CASE("estimate emits a CSV record and honest errors") {
  const RunResult ok = run("estimate --mode single --node 741 --voltage 229.2 --format csv");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("mode,node,measured_v") != std::string::npos);
  CHECK(ok.output.find("single,741,229.2") != std::string::npos);

  const RunResult bad = run("estimate --mode single --node nowhere --voltage 229");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("error:") != std::string::npos);

  const RunResult unreachable =
      run("estimate --mode single --node 741 --voltage 150 --hi 10000");
  CHECK(unreachable.exit_code == 1);
  CHECK(unreachable.output.find("load_hi_w") != std::string::npos);
}

TEST_CASE("analyze propagate and band write their tables") {
  TempDir tmp;
  const fs::path deltas = tmp.path / "deltas.csv";
  const RunResult p =
      run("analyze propagate --node 741 --verr 0.41 --out " + deltas.string());
  CHECK(p.exit_code == 0);
  CHECK(p.output.find("node,v_err_v,equivalent_uniform_w,equivalent_single_w") !=
        std::string::npos);
  CHECK(slurp(deltas).rfind("node,delta_v\n", 0) == 0);

  const fs::path loads = tmp.path / "loads.csv";
  std::ofstream(loads) << "bus,watts\n741,60000\n";
  const RunResult b = run("analyze band --loads " + loads.string());
  CHECK(b.exit_code == 0);
  CHECK(b.output.find("741,") != std::string::npos);
  CHECK(b.output.find(",low") != std::string::npos);
}

TEST_CASE("report reruns byte-identically") {
  TempDir tmp;
  const fs::path scenario = tmp.path / "scenario.json";
  std::ofstream(scenario) << kShortScenario;
  REQUIRE(run("report --scenario " + scenario.string() + " --out " +
              (tmp.path / "r1").string())
              .exit_code == 0);
  REQUIRE(run("report --scenario " + scenario.string() + " --out " +
              (tmp.path / "r2").string())
              .exit_code == 0);

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(tmp.path / "r1")) {
    ++files;
    const auto other = tmp.path / "r2" / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
  }
  CHECK(files >= 8);
  CHECK(fs::exists(tmp.path / "r1" / "accuracy.csv"));
  CHECK(fs::exists(tmp.path / "r1" / "propagation_summary.csv"));
}

TEST_CASE("unknown flags and missing subcommands fail cleanly") {
  CHECK(run("").exit_code != 0);
  CHECK(run("simulate --bogus 1").exit_code != 0);
  CHECK(run("calibrate --plug x.csv").exit_code != 0);  // --ref required
}

// End-to-end checks of the command line binary: exit codes, output files,
// byte-level determinism. The binary path comes from the MIXLAP_CLI
// environment variable (set by the test harness).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("MIXLAP_CLI");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mixlap_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int counter() {
    static int c = 0;
    return ++c;
  }
};

const char* kInterval = R"("{\"shape\":\"interval\",\"params\":{\"a\":0,\"b\":1}}")";
const char* kTent = R"("{\"family\":\"tent\",\"radius\":0.2}")";

}  // namespace

TEST_CASE("eig1 happy path writes results and exits 0") {
  TempDir tmp;
  const int code = run(std::string("eig1 --domain ") + kInterval + " --kernel " +
                       kTent + " -n 60 --p 2 --out " + tmp.path.string());
  CHECK(code == 0);
  CHECK(fs::exists(tmp.path / "results.csv"));
  CHECK(fs::exists(tmp.path / "results.json"));
  const std::string csv = slurp(tmp.path / "results.csv");
  CHECK(csv.find("eig1,interval,2,tent(r=0.2),60,") != std::string::npos);
}

TEST_CASE("malformed config exits 4 and writes nothing") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "bad.json";
  std::ofstream(cfg) << "{ not json";
  const int code =
      run("eig1 --config " + cfg.string() + " --out " + tmp.path.string() + "/out");
  CHECK(code == 4);
  CHECK_FALSE(fs::exists(tmp.path / "out" / "results.csv"));
  CHECK_FALSE(fs::exists(tmp.path / "out" / "results.json"));
}

TEST_CASE("unknown config keys are rejected with exit 4") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  std::ofstream(cfg) << R"({"p": 2.0, "surprise": 1})";
  CHECK(run("eig1 --config " + cfg.string() + " --out " + tmp.path.string()) == 4);
}

TEST_CASE("config file drives a full run; flags override scalars") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "cfg.json";
  std::ofstream(cfg) << R"({
    "p": 2.0,
    "resolution": 50,
    "kernel": {"family": "tent", "radius": 0.2},
    "domain": {"shape": "interval", "params": {"a": 0, "b": 1}},
    "solver": {"tol": 1e-9, "max_iter": 50000, "seed": 3}
  })";
  const int code = run("eig1 --config " + cfg.string() + " -n 64 --out " +
                       tmp.path.string() + "/o1");
  CHECK(code == 0);
  const std::string csv = slurp(tmp.path / "o1" / "results.csv");
  CHECK(csv.find(",64,") != std::string::npos);  // the flag won
}

TEST_CASE("check subcommand: pass table, exit 0; tiny geometric violation demo") {
  TempDir tmp;
  CHECK(run("check --lemma g --samples 20000 --p 3 --seed 7 --out " +
            tmp.path.string()) == 0);
  const std::string csv = slurp(tmp.path / "results.csv");
  CHECK(csv.rfind("lemma,p,trials,violations,max_defect,pass\n", 0) == 0);
  CHECK(csv.find("g,3,20000,0,") != std::string::npos);
}

TEST_CASE("identical config and seed produce byte-identical results.csv") {
  TempDir tmp;
  const fs::path cfg = tmp.path / "drift.json";
  std::ofstream(cfg) << R"({
    "p": 2.0,
    "resolution": 40,
    "kernel": {"family": "tent", "radius": 0.12},
    "solver": {"seed": 11},
    "experiment": {"R": 0.3, "separations": [0.66, 0.8]}
  })";
  CHECK(run("drift --config " + cfg.string() + " --out " + tmp.path.string() +
            "/r1") == 0);
  CHECK(run("drift --config " + cfg.string() + " --out " + tmp.path.string() +
            "/r2") == 0);
  CHECK(slurp(tmp.path / "r1" / "results.csv") ==
        slurp(tmp.path / "r2" / "results.csv"));
}

TEST_CASE("drift writes an svg chart on request") {
  TempDir tmp;
  const int code = run("drift --kernel \"{\\\"family\\\":\\\"tent\\\",\\\"radius\\\":0.12}\" "
                       "-n 40 --p 2 --svg --out " + tmp.path.string());
  CHECK(code == 0);
  CHECK(fs::exists(tmp.path / "drift.svg"));
  const std::string svg = slurp(tmp.path / "drift.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("eig2 dumps fields and the pair table behind flags") {
  TempDir tmp;
  const int code = run(std::string("eig2 --domain ") + kInterval + " --kernel " +
                       kTent + " -n 50 --p 2 --dump-fields --dump-pairs --out " +
                       tmp.path.string());
  CHECK(code == 0);
  CHECK(fs::exists(tmp.path / "fields" / "phi1.csv"));
  CHECK(fs::exists(tmp.path / "fields" / "phi2.csv"));
  CHECK(fs::exists(tmp.path / "pairs.csv"));
  const std::string pairs = slurp(tmp.path / "pairs.csv");
  CHECK(pairs.rfind("i,j,w\n", 0) == 0);
}

TEST_CASE("oracle subcommand cross-checks the solvers at p=2") {
  TempDir tmp;
  const int code = run(std::string("oracle --domain ") + kInterval + " --kernel " +
                       kTent + " -n 60 --p 2 --out " + tmp.path.string());
  CHECK(code == 0);
  const std::string json = slurp(tmp.path / "results.json");
  CHECK(json.find("rel_error_lambda1") != std::string::npos);
  // p != 2 is a config error
  CHECK(run(std::string("oracle --domain ") + kInterval + " --kernel " + kTent +
            " -n 40 --p 3 --out " + tmp.path.string()) == 4);
}

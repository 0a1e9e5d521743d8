#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "isoflow/cli.hpp"

namespace fs = std::filesystem;
using isoflow::cli::run;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("isoflow_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& p) {
  std::ifstream ifs(p, std::ios::binary);
  std::ostringstream ss;
  ss << ifs.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("catalog list") {
  CHECK(run({"catalog", "list"}) == 0);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({"does-not-exist"}) == 1);
  CHECK(run({"reconstruct"}) == 1);  // missing required options
  CHECK(run({"reconstruct", "--field", "nope", "--grid", "0,1,3"}) == 1);
  CHECK(run({"asymptotics", "--field", "layered2d", "--horizons", "abc"}) == 1);
}

TEST_CASE("reconstruct produces a CSV with the spot value") {
  TempDir tmp;
  const std::string out = tmp.file("sigma.csv");
  CHECK(run({"reconstruct", "--field", "cubicflow2d", "--level", "1",
             "--band", "0,inf", "--grid", "-2,2,21", "--out", out}) == 0);
  const std::string text = slurp(out);
  CHECK(text.rfind("x1,x2,u,tau,sigma,status", 0) == 0);
  // row for x = (1, 1): tau = -1, sigma = 1/16
  bool found = false;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("1,1,", 0) == 0) {
      found = true;
      std::istringstream cells(line);
      std::string cell;
      std::vector<std::string> row;
      while (std::getline(cells, cell, ',')) row.push_back(cell);
      REQUIRE(row.size() == 6);
      CHECK(std::stod(row[3]) == Catch::Approx(-1.0).margin(1e-7));
      CHECK(std::stod(row[4]) == Catch::Approx(0.0625).epsilon(1e-6));
    }
  }
  CHECK(found);
  // out-of-band rows are flagged rather than numeric
  CHECK(text.find("NotInBand") != std::string::npos);
  CHECK(text.find("nan") == std::string::npos);
}

TEST_CASE("asymptotics without a frame exits 2 when the bound is requested") {
  TempDir tmp;
  CHECK(run({"asymptotics", "--field", "shearcos2d", "--seed", "0,0",
             "--horizons", "10", "--with-bound", "--out",
             tmp.file("a.csv")}) == 2);
  // without the bound the sweep itself works
  CHECK(run({"asymptotics", "--field", "shearcos2d", "--seed", "0,0",
             "--horizons", "5", "--out", tmp.file("b.csv")}) == 0);
}

TEST_CASE("criterium report is deterministic byte for byte") {
  TempDir tmp;
  const std::string a = tmp.file("a.json"), b = tmp.file("b.json");
  CHECK(run({"criterium", "--frame", "layered2d", "--out", a}) == 0);
  CHECK(run({"criterium", "--frame", "layered2d", "--out", b}) == 0);
  const std::string ja = slurp(a);
  CHECK(ja == slurp(b));
  CHECK(ja.find("\"pass\": true") != std::string::npos);
  CHECK(run({"criterium", "--frame", "cubicflow2d", "--out", tmp.file("c.json")}) == 2);
}

TEST_CASE("check-invariant on the rotated shear variant") {
  TempDir tmp;
  const std::string out = tmp.file("chk.json");
  CHECK(run({"check-invariant", "--field", "shearcos2d", "--variant",
             "rotated", "--sigma", "one", "--times", "0.01,0.1", "--n", "32",
             "--phi-axis", "1", "--phi-k", "2", "--out", out}) == 0);
  const std::string text = slurp(out);
  CHECK(text.find("NoInvariantMeasure") != std::string::npos);
  // positive measure deviates: the identity must fail
  const auto j = isoflow::json::parse(text);
  CHECK(j["invariance"]["max_deviation"].get<double>() > 1e-3);
}

TEST_CASE("check-invariant accepts the layered2d measure") {
  TempDir tmp;
  const std::string out = tmp.file("chk2.json");
  CHECK(run({"check-invariant", "--field", "layered2d", "--times", "0.1,1",
             "--n", "64", "--out", out}) == 0);
  const auto j = isoflow::json::parse(slurp(out));
  CHECK(j["invariance"]["max_deviation"].get<double>() <= 1e-6);
  for (const auto& slab : j["slab"])
    CHECK(slab["verdict"] == "Inconclusive");
}

TEST_CASE("homogenize quick run with json output") {
  TempDir tmp;
  const std::string out = tmp.file("hom.json");
  CHECK(run({"homogenize", "--field", "harmonic1d", "--u0", "sin_x1", "--eps",
             "0.25,0.125,0.0625", "--time", "1", "--grid-n", "16", "--out",
             out, "--format", "json"}) == 0);
  const auto j = isoflow::json::parse(slurp(out));
  CHECK(j["study"]["sup_errors"].size() == 3);
  CHECK(j["study"]["bounds"].size() == 3);
}

TEST_CASE("config file supplies defaults that flags override") {
  TempDir tmp;
  const std::string cfgfile = tmp.file("isoflow.cfg");
  {
    std::ofstream ofs(cfgfile);
    ofs << "threads=2\nrel-tol=1e-8\n";
  }
  const std::string out = tmp.file("r.csv");
  CHECK(run({"--config", cfgfile, "reconstruct", "--field", "cubicflow2d",
             "--level", "1", "--band", "0,inf", "--grid", "0.4,1.2,3", "--out",
             out}) == 0);
  // flag wins over the config value
  CHECK(run({"--config", cfgfile, "--rel-tol", "1e-10", "reconstruct",
             "--field", "cubicflow2d", "--level", "1", "--band", "0,inf",
             "--grid", "0.4,1.2,3", "--out", out}) == 0);
}

TEST_CASE("unwritable output path exits 3") {
  CHECK(run({"criterium", "--frame", "layered2d", "--out",
             "/nonexistent_dir_zzz/out.json"}) == 3);
}

#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Result cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd =
      std::string("\"") + RRMH_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

fs::path write_config(const fs::path& dir, const std::string& name, json j) {
  const fs::path p = dir / name;
  std::ofstream(p) << j.dump();
  return p;
}

struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("rrmh_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

}  // namespace

TEST_CASE("cli run writes chain, state and report") {
  Scratch s("run");
  const fs::path cfg = write_config(s.dir, "c.json",
                                    {{"seed", 2},
                                     {"steps", 400},
                                     {"sampler", "da"},
                                     {"output_dir", (s.dir / "out").string()}});
  const Result r = cli("run \"" + cfg.string() + "\"", s.dir);
  CHECK(r.code == 0);
  for (const char* f : {"chain.csv", "state.json", "report.json"}) CHECK(fs::exists(s.dir / "out" / f));
  const json rep = json::parse(slurp(s.dir / "out" / "report.json"));
  CHECK(rep["calls"]["exact"].get<long>() >= 1);
}

TEST_CASE("cli exit codes") {
  Scratch s("codes");
  SUBCASE("invalid config names the field") {
    const fs::path cfg = write_config(s.dir, "bad.json", {{"seed", 1}, {"steps", "many"}});
    const Result r = cli("run \"" + cfg.string() + "\"", s.dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("/steps") != std::string::npos);
  }
  SUBCASE("unparsable json") {
    const fs::path p = s.dir / "broken.json";
    std::ofstream(p) << "{\"seed\": 1,";
    CHECK(cli("run \"" + p.string() + "\"", s.dir).code == 2);
  }
  SUBCASE("bad arguments") { CHECK(cli("speedup --tau-mh 1", s.dir).code == 2); }
  SUBCASE("solver failure keeps the partial chain") {
    const fs::path cfg = write_config(s.dir, "fail.json",
                                      {{"seed", 1},
                                       {"steps", 300},
                                       {"fail_after_exact_calls", 50},
                                       {"output_dir", (s.dir / "out").string()}});
    const Result r = cli("run \"" + cfg.string() + "\"", s.dir);
    CHECK(r.code == 3);
    REQUIRE(fs::exists(s.dir / "out" / "chain.csv"));
    std::ifstream in(s.dir / "out" / "chain.csv");
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 51);
    CHECK(fs::exists(s.dir / "out" / "state.json"));
  }
}

TEST_CASE("cli speedup") {
  Scratch s("speedup");
  const Result r = cli("speedup --tau-mh 169 --tau-da 208 --alpha 0.13 --t-star 0.15 --t 2.60", s.dir);
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(4.33).epsilon(0.002));
}

TEST_CASE("cli report on a single MH chain") {
  Scratch s("report");
  const fs::path cfg = write_config(s.dir, "c.json",
                                    {{"seed", 5}, {"steps", 2000}, {"output_dir", (s.dir / "mh").string()}});
  REQUIRE(cli("run \"" + cfg.string() + "\"", s.dir).code == 0);
  const Result r = cli("report \"" + (s.dir / "mh" / "chain.csv").string() + "\" --out \"" +
                           (s.dir / "rep").string() + "\"",
                       s.dir);
  CHECK(r.code == 0);
  const json rep = json::parse(slurp(s.dir / "rep" / "report.json"));
  CHECK(rep["chains"][0]["beta_bar"] == "n/a");
  CHECK_FALSE(rep["chains"][0].contains("speedup"));
  int hists = 0;
  for (const auto& e : fs::directory_iterator(s.dir / "rep")) {
    if (e.path().filename().string().find("_hist_x") != std::string::npos) ++hists;
  }
  CHECK(hists == 4);
}

TEST_CASE("cli suite") {
  Scratch s("suite");
  const fs::path cfg = write_config(
      s.dir, "suite.json",
      {{"seed", 8},
       {"steps", 1500},
       {"output_dir", (s.dir / "out").string()},
       {"suite",
        {{{"name", "mh"}},
         {{"name", "a1"}, {"sampler", "da"}, {"approx", {{"kind", "approx1"}}}},
         {{"name", "a4"},
          {"sampler", "ada"},
          {"approx", {{"kind", "approx4"}, {"eem_source", "posterior-adaptive"}}}}}}});
  const Result r = cli("run \"" + cfg.string() + "\"", s.dir);
  CHECK(r.code == 0);
  const json rep = json::parse(slurp(s.dir / "out" / "suite_report.json"));
  CHECK(rep["chains"].size() == 3);
  CHECK(rep["beta_ordering"].size() == 2);
  CHECK(rep["chains"][1].contains("speedup"));
  for (const char* n : {"mh", "a1", "a4"}) CHECK(fs::exists(s.dir / "out" / n / "chain.csv"));
}

#include "bwp/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const char* env = std::getenv("BWP_TEST_TMP");
  fs::path root = env && *env ? fs::path(env) : fs::temp_directory_path() / "bwp_cli_test";
  fs::path p = root / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "bwp");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  Run r;
  r.code = bwp::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<fs::path> tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"simulate", "--family", "no-such-family", "--init", "0,0"}).code == 2);
  CHECK(run({"simulate", "--family", "line-zero-2.1", "--init", "0,0", "--bogus"}).code == 2);
  CHECK(run({"simulate", "--family", "tb-2.4", "--init", "0,0,0", "--param", "eps=-1",
             "--out", scratch("bad_param").string()})
            .code == 2);
  CHECK(run({"heteroclinic", "--family", "hopf-2.3", "--source", "0.5", "--delta", "1e-2",
             "--out", scratch("bad_delta").string()})
            .code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate writes the trajectory and its metadata") {
  const auto dir = scratch("simulate");
  auto r = run({"simulate", "--family", "tb-2.4", "--param", "eps=0", "--param", "lambda=1", "--param", "b=0",
                "--init", "1.1,0,-0.105",
                "--t", "5", "--dt", "0.5", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(dir / "trajectory.csv");
  CHECK(csv.rfind("t,c0,c1,c2,theta,H,tau,H_tilde\n", 0) == 0);
  const auto meta = load(dir / "trajectory.json");
  CHECK(meta["family"] == "tb-2.4");
  CHECK(meta["t_end"].get<double>() == doctest::Approx(5.0));
  CHECK(meta["steps"]["accepted"].get<int>() > 0);
}

TEST_CASE("numerical failures exit with 1 and leave failure.json") {
  const auto dir = scratch("blowup");
  auto r = run({"simulate", "--family", "line-zero-2.1", "--init", "1,0", "--t", "10",
                "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(fs::exists(dir / "failure.json"));
}

TEST_CASE("classify finds the Takens-Bogdanov and Hopf points") {
  const auto dir = scratch("classify");
  auto r = run({"classify", "--family", "rev-tb-2.5", "--param", "a=0.2", "--param", "b=0",
                "--range", "-1:1", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = load(dir / "classify.json");
  REQUIRE(j.size() == 3);
  CHECK(j[0]["kind"] == "takens-bogdanov");
  CHECK(j[1]["kind"] == "hopf");
  CHECK(j[1]["subtype"] == "elliptic");
}

TEST_CASE("heteroclinic and melnikov outputs") {
  const auto dir = scratch("hetero");
  auto r = run({"heteroclinic", "--family", "hopf-2.3", "--param", "omega=1", "--param", "sign=-1",
                "--source", "0.5", "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto j = load(dir / "heteroclinic.json");
  CHECK(j["connected"] == true);
  CHECK(j["target"].get<double>() == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(fs::exists(dir / "heteroclinic_orbit.csv"));

  const auto mdir = scratch("melnikov");
  r = run({"melnikov", "--family", "tb-2.4", "--param", "eps=0.1", "--param", "lambda=1", "--param", "b=-1.2",
           "--theta-range", "0.5:10", "--n", "32", "--out", mdir.string()});
  REQUIRE(r.code == 0);
  const auto z = load(mdir / "melnikov_zeros.json");
  REQUIRE(z["zeros"].size() == 1);
  CHECK(z["zeros"][0]["theta"].get<double>() == doctest::Approx(3.62426).epsilon(1e-5));
}

TEST_CASE("saved configurations reproduce the run") {
  const auto a = scratch("config_a"), b = scratch("config_b");
  const auto cfg = scratch("config") / "run.json";
  auto r = run({"portrait", "--family", "hopf-2.3", "--param", "omega=1", "--param", "sign=-1", "--view", "state-3d",
                "--t-span", "5", "--out", a.string(), "--save-config", cfg.string()});
  REQUIRE(r.code == 0);
  const auto c = load(cfg);
  CHECK(c["command"] == "portrait");
  CHECK(c["params"]["gamma"].is_number());  // defaults are resolved
  r = run({"portrait", "--from-config", cfg.string(), "--out", b.string(), "--jobs", "2"});
  REQUIRE(r.code == 0);
  const auto fa = tree(a), fb = tree(b);
  REQUIRE(fa == fb);
  for (const auto& f : fa) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("BWP_OUT takes precedence over --out") {
  const auto env_dir = scratch("env_out"), flag_dir = scratch("flag_out");
  ::setenv("BWP_OUT", env_dir.string().c_str(), 1);
  auto r = run({"osc", "--m", "1", "--t", "5", "--out", flag_dir.string()});
  ::unsetenv("BWP_OUT");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(env_dir / "osc.json"));
  CHECK_FALSE(fs::exists(flag_dir / "osc.json"));
  CHECK(bwp::resolve_output_dir(std::string("x")) == fs::path("x"));
  CHECK(bwp::resolve_output_dir(std::nullopt) == fs::path("bwp_out"));
}

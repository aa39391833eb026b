#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(MBPRE_CLI_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(MBPRE_CONFIG_DIR) + "/" + name; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("mbpre_cli_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("optimize on the symmetric example") {
  const auto r = run("optimize --config " + config("two_trait_iid.toml"));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["strategy"]["p"][0].get<double>() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(j["rate"].get<double>() == doctest::Approx(std::log(1.05)).epsilon(1e-10));
  CHECK(j["polymorphism_required"] == true);
}

TEST_CASE("optimize with sensing returns responsive switching") {
  const auto r = run("optimize --config " + config("two_state_sensing.toml"));
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  const auto rows = j["strategy"]["by_state"];
  CHECK(rows[0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rows[1][1].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("one-trait config gives a Dirac with zero gap") {
  const auto dir = scratch("single");
  std::ofstream(dir / "one.toml") << "[landscape]\nmean = [[1.2, 0.7]]\n[environment]\nmarginal = [0.4, 0.6]\n";
  const auto r = run("optimize --config " + (dir / "one.toml").string());
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["strategy"]["p"][0] == 1.0);
  CHECK(j["certificate_gap"].get<double>() == doctest::Approx(0.0));
}

TEST_CASE("scan over q has one row per value and kinks at 2/7 and 5/7") {
  const auto r = run("scan --config " + config("two_state_sensing.toml") + " --format csv");
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int rows = -1;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 9);
  const auto empty = run("scan --config " + config("two_state_sensing.toml") + " --format csv --param q --values ''");
  CHECK(empty.code == 0);
  CHECK(std::count(empty.out.begin(), empty.out.end(), '\n') == 1);
  CHECK(run("scan --config " + config("two_state_sensing.toml") + " --param bogus --values 0.1").code == 1);
}

TEST_CASE("simulate is deterministic for a fixed seed") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const auto ra = run("simulate --config " + config("two_trait_iid.toml") + " --seed 3 --threads 1 --out " + a.string());
  const auto rb = run("simulate --config " + config("two_trait_iid.toml") + " --seed 3 --threads 2 --out " + b.string());
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(ra.out == rb.out);
  CHECK(slurp(a / "trajectories.csv") == slurp(b / "trajectories.csv"));
  CHECK_FALSE(slurp(a / "trajectories.csv").empty());
}

TEST_CASE("genealogy writes product marginals") {
  const auto dir = scratch("gen");
  std::ofstream(dir / "g.toml") << "[landscape]\nmean = [[1.5, 0.6], [0.6, 1.5]]\n"
                                   "[environment]\nmarginal = [0.5, 0.5]\n"
                                   "[genealogy]\nhorizon = 3\n[path]\nvalues = [0, 0, 1]\n";
  const auto r = run("genealogy --config " + (dir / "g.toml").string() + " --out " + dir.string());
  REQUIRE(r.code == 0);
  CHECK(std::filesystem::exists(dir / "marginals.csv"));
}

TEST_CASE("gaussian gain and optimal") {
  const auto r = run("gaussian gain --scale 1 --width-sq 1 --chi 10 --rho 0.5");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["gain_mixed_over_pure"].get<double>() == doctest::Approx(0.5 * (9 - std::log(10.0))).epsilon(1e-12));
  CHECK(run("gaussian optimal --scale 1 --width-sq 1 --variance 2 --rho 0.3").code == 0);
}

TEST_CASE("malformed input exits with 1") {
  CHECK(run("optimize").code == 1);
  CHECK(run("optimize --config /nonexistent.toml").code == 1);
  const auto dir = scratch("bad");
  std::ofstream(dir / "bad.toml") << "[landscape\nmean = 1\n";
  CHECK(run("optimize --config " + (dir / "bad.toml").string()).code == 1);
  CHECK(run("bogus-command").code == 1);
}

TEST_CASE("non-convergence exits with 2") {
  const auto dir = scratch("nonconv");
  std::ofstream(dir / "n.toml") << "[landscape]\nmean = [[1.0, 2.5, 0.3], [0.4, 1.0, 2.0], [2.0, 0.2, 1.3]]\n"
                                   "[environment]\nmarginal = [0.3, 0.3, 0.4]\n"
                                   "[solver]\nmax_iter = 1\ntol = 1e-15\n";
  CHECK(run("optimize --config " + (dir / "n.toml").string()).code == 2);
}

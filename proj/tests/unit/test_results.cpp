#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "bootdqn/error.hpp"
#include "bootdqn/experiments.hpp"
#include "bootdqn/results.hpp"

using namespace bootdqn;
using namespace bootdqn::harness;
namespace fs = std::filesystem;

namespace {

RunRecord sample_record() {
  RunRecord r;
  r.label = "boot_dqn_N4_seed0";
  r.agent = "boot_dqn";
  r.chain_length = 4;
  r.num_heads = 10;
  r.mask = "bernoulli(0.5)";
  r.optimal_return = 10.0;
  r.returns = {0.1, 1.0 / 3.0, 10.0, std::nextafter(10.0, 0.0), 1e-300, 0.013};
  r.cum_regret = cumulative_sum(std::vector<double>{9.9, 10.0 - 1.0 / 3.0, 0.0, 1e-15, 10.0, 9.987});
  r.active_metric = {3, 7, 0, 9, 1, -1};
  r.learned = {6, true};
  return r;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("bootdqn_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("CSV round trip recovers every value exactly") {
  const auto r = sample_record();
  std::stringstream ss;
  write_run_csv(ss, r);
  CHECK(ss.str().rfind("episode,return,cum_regret,active_metric\n", 0) == 0);
  const auto t = read_run_csv(ss);
  CHECK(t.returns == r.returns);
  CHECK(t.cum_regret == r.cum_regret);
  CHECK(t.active_metric == r.active_metric);
  CHECK(t.episode == std::vector<long long>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("malformed CSV is rejected") {
  std::stringstream bad("episode,return\n1,2\n");
  CHECK_THROWS(read_run_csv(bad));
}

TEST_CASE("empty result set: summary with zero cells and no CSVs") {
  ExperimentResult res;
  res.summary.budget = 10;
  const auto dir = temp_dir("empty");
  emit_results(res, dir);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.path().extension() == ".csv";
  CHECK(files == 0);
  std::ifstream in(dir / "summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["cells"].empty());
  CHECK(j["version"] == kVersion);
}

TEST_CASE("summary JSON is byte-stable apart from wall time") {
  ExperimentResult a;
  a.summary.budget = 6;
  a.summary.cells.push_back({"boot_dqn", 4, 10, 0.5, {0}, {{6, true}}, {6.0, true}, 99.0 + 1.0 / 128.0, 0});
  a.runs.push_back(sample_record());
  auto b = a;
  b.runs[0].wall_seconds = 123.0;
  auto strip = [](const std::string& s) {
    auto j = nlohmann::json::parse(s);
    for (auto& r : j["runs"]) r.erase("wall_seconds");
    return j.dump();
  };
  CHECK(summary_json(a.summary, a.runs) == summary_json(a.summary, a.runs));
  CHECK(strip(summary_json(a.summary, a.runs)) == strip(summary_json(b.summary, b.runs)));
}

TEST_CASE("unwritable output path raises an I/O error") {
  ExperimentResult res;
  const auto blocker = temp_dir("blocker");
  std::ofstream(blocker.string()) << "file, not a directory";
  CHECK_THROWS_AS(emit_results(res, blocker / "sub"), IoError);
  fs::remove(blocker);
}

TEST_CASE("error JSON is one machine-readable line") {
  const auto s = error_json("config_error", "bad \"value\"\nhere");
  CHECK(s.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(s);
  CHECK(j["error"] == "config_error");
  CHECK(j["message"] == "bad \"value\"\nhere");
}

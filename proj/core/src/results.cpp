#include "bootdqn/results.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "bootdqn/error.hpp"

namespace bootdqn::harness {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

Json config_object(const std::string& echo) {
  Json obj = Json::object();
  std::istringstream in(echo);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    obj[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return obj;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

}  // namespace

void write_run_csv(std::ostream& out, const RunRecord& run) {
  out << "episode,return,cum_regret,active_metric\n";
  for (std::size_t i = 0; i < run.returns.size(); ++i) {
    out << (i + 1) << ',' << fmt(run.returns[i]) << ','
        << (i < run.cum_regret.size() ? fmt(run.cum_regret[i]) : std::string("nan")) << ','
        << (i < run.active_metric.size() ? fmt(run.active_metric[i]) : std::string("nan")) << '\n';
  }
}

RunTable read_run_csv(std::istream& in) {
  RunTable table;
  std::string line;
  if (!std::getline(in, line) || line != "episode,return,cum_regret,active_metric") {
    throw InputError("csv: unexpected header");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 4) throw InputError("csv line " + std::to_string(lineno) + ": expected 4 columns");
    table.episode.push_back(static_cast<long long>(parse_number(cols[0], lineno)));
    table.returns.push_back(parse_number(cols[1], lineno));
    table.cum_regret.push_back(parse_number(cols[2], lineno));
    table.active_metric.push_back(parse_number(cols[3], lineno));
  }
  return table;
}

std::string summary_json(const SummaryRecord& summary, const std::vector<RunRecord>& runs) {
  Json j;
  j["version"] = kVersion;
  j["kind"] = to_string(summary.kind);
  j["config"] = config_object(summary.config_echo);
  j["budget"] = summary.budget;
  j["optimal_return"] = summary.optimal_return;

  Json bounds = Json::array();
  for (const auto& [n, v] : summary.lower_bounds) bounds.push_back({{"n", n}, {"value", v}});
  j["lower_bounds"] = bounds;

  Json cells = Json::array();
  for (const auto& c : summary.cells) {
    Json ttl = Json::array(), censored = Json::array();
    for (const auto& r : c.runs) {
      ttl.push_back(r.episode);
      censored.push_back(r.censored);
    }
    cells.push_back({{"agent", c.agent},
                     {"n", c.chain_length},
                     {"k", c.num_heads},
                     {"p", c.mask_p},
                     {"seeds", c.seeds},
                     {"time_to_learn", ttl},
                     {"censored", censored},
                     {"median", c.median.value},
                     {"median_censored", c.median.censored},
                     {"lower_bound", c.lower_bound},
                     {"below_lower_bound", !c.median.censored && c.median.value < c.lower_bound},
                     {"failed_runs", c.failed_runs}});
  }
  j["cells"] = cells;

  Json curves = Json::array();
  for (const auto& c : summary.regret_curves) {
    curves.push_back({{"agent", c.agent},
                      {"final_mean", c.mean.empty() ? 0.0 : c.mean.back()},
                      {"final_standard_error", c.standard_error.empty() ? 0.0 : c.standard_error.back()},
                      {"mean", c.mean},
                      {"standard_error", c.standard_error}});
  }
  j["regret_curves"] = curves;

  Json rs = Json::array();
  for (const auto& r : runs) {
    rs.push_back({{"label", r.label},
                  {"agent", r.agent},
                  {"n", r.chain_length},
                  {"seed", r.seed},
                  {"k", r.num_heads},
                  {"mask", r.mask},
                  {"config_hash", r.config_hash},
                  {"episodes", r.returns.size()},
                  {"time_to_learn", r.learned.episode},
                  {"censored", r.learned.censored},
                  {"stopped_early", r.stopped_early},
                  {"failed", r.failed},
                  {"failure", r.failure},
                  {"wall_seconds", r.wall_seconds}});
  }
  j["runs"] = rs;
  return j.dump(2) + "\n";
}

void emit_results(const ExperimentResult& result, const std::filesystem::path& dir) {
  ensure_dir(dir);
  for (const auto& run : result.runs) {
    std::ostringstream os;
    write_run_csv(os, run);
    write_file(dir / (run.label + ".csv"), os.str());
  }
  write_file(dir / "summary.json", summary_json(result.summary, result.runs));
}

void emit_regression(const RegressionResult& result, const ExperimentConfig& config,
                     const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::ostringstream grid;
  grid << "x,truth,mean,sd,q05,q95\n";
  for (std::size_t i = 0; i < result.grid.size(); ++i) {
    grid << fmt(result.grid[i]) << ',' << fmt(result.truth[i]) << ',' << fmt(result.mean[i]) << ','
         << fmt(result.sd[i]) << ',' << fmt(result.q05[i]) << ',' << fmt(result.q95[i]) << '\n';
  }
  write_file(dir / "regression_grid.csv", grid.str());

  std::ostringstream data;
  data << "x,y\n";
  for (std::size_t i = 0; i < result.data.x.size(); ++i) {
    data << fmt(result.data.x[i]) << ',' << fmt(result.data.y[i]) << '\n';
  }
  write_file(dir / "regression_data.csv", data.str());

  Json j;
  j["version"] = kVersion;
  j["kind"] = "regression";
  j["config"] = config_object(config.describe());
  j["nets_kept"] = result.predictions.size();
  j["nets_diverged"] = result.diverged;
  j["alpha"] = result.data.alpha;
  j["beta"] = result.data.beta;
  j["noise_sd"] = result.data.noise_sd;
  write_file(dir / "summary.json", j.dump(2) + "\n");
}

void emit_mask_diagnostics(const std::vector<MaskLawStats>& stats, const ExperimentConfig& config,
                           const std::filesystem::path& dir) {
  ensure_dir(dir);
  std::ostringstream csv;
  csv << "law,samples,mean,theory_mean,mean_se,variance,theory_variance,variance_se,support_ok,tail_gt3,theory_tail_gt3\n";
  Json laws = Json::array();
  for (const auto& s : stats) {
    csv << s.law << ',' << s.samples << ',' << fmt(s.mean) << ',' << fmt(s.theory_mean) << ','
        << fmt(s.mean_standard_error) << ',' << fmt(s.variance) << ',' << fmt(s.theory_variance) << ','
        << fmt(s.variance_standard_error) << ',' << (s.support_ok ? 1 : 0) << ',' << fmt(s.tail_above_3) << ','
        << fmt(s.theory_tail_above_3) << '\n';
    laws.push_back({{"law", s.law},
                    {"samples", s.samples},
                    {"mean", s.mean},
                    {"theory_mean", s.theory_mean},
                    {"mean_standard_error", s.mean_standard_error},
                    {"variance", s.variance},
                    {"theory_variance", s.theory_variance},
                    {"variance_standard_error", s.variance_standard_error},
                    {"support_ok", s.support_ok},
                    {"tail_above_3", s.tail_above_3},
                    {"theory_tail_above_3", s.theory_tail_above_3}});
  }
  write_file(dir / "masks.csv", csv.str());
  Json j;
  j["version"] = kVersion;
  j["kind"] = "mask_diagnostics";
  j["config"] = config_object(config.describe());
  j["laws"] = laws;
  write_file(dir / "summary.json", j.dump(2) + "\n");
}

std::string error_json(const std::string& kind, const std::string& message) {
  Json j;
  j["error"] = kind;
  j["message"] = message;
  return j.dump();
}

}  // namespace bootdqn::harness

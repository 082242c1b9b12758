// rrmh: run delayed-acceptance experiments and report on chain files.
//
//   rrmh run <config.json>
//   rrmh report <chain.csv>... [--baseline <chain.csv>] [--t-star S --t T]
//   rrmh fit-prior-eem <config.json>
//   rrmh speedup --tau-mh A --tau-da B --alpha P --t-star S --t T
//
// Exit codes: 0 success, 2 invalid config or malformed chain file,
// 3 forward-solver failure (the partial chain is still written), 1 other errors.

#include "rrmh/chain.hpp"
#include "rrmh/log.hpp"
#include "rrmh/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

fs::path resolve_output(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("RRMH_OUTPUT_ROOT")) p = fs::path(root) / p;
  }
  return p;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw rrmh::Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

int cmd_run(const std::string& config_path) {
  const json raw = rrmh::load_json_file(config_path);
  const auto configs = rrmh::parse_suite(raw);
  const bool suite = configs.size() > 1 || raw.contains("suite");
  const fs::path root = resolve_output(configs.front().output_dir);

  int status = 0;
  std::vector<rrmh::ChainTable> tables;
  std::vector<std::string> names;
  std::optional<std::size_t> baseline;
  for (const auto& cfg : configs) {
    const fs::path dir = suite ? resolve_output(cfg.output_dir) / cfg.name : resolve_output(cfg.output_dir);
    fs::create_directories(dir);
    std::cerr << "running '" << cfg.name << "' (" << rrmh::to_string(cfg.sampler) << ", "
              << cfg.steps << " steps) -> " << dir.string() << "\n";
    const rrmh::ChainRecord rec = rrmh::run_chain(cfg);
    const fs::path chain = dir / "chain.csv";
    rrmh::write_chain_csv(rec, chain.string(), cfg.record_timings);
    rrmh::write_state_json(rec, (dir / "state.json").string());

    if (rec.error) {
      std::cerr << "error: solver failure in '" << cfg.name << "': " << *rec.error
                << " (partial chain written)\n";
      status = kExitSolver;
    }
    rrmh::ChainTable table = rrmh::read_chain_csv(chain.string());
    rrmh::ReportOptions ro;
    ro.burn_in = cfg.burn_in;
    ro.artifact_dir = dir.string();
    json report = rrmh::make_report({table}, ro);
    report["config_hash"] = rec.config_hash;
    report["calls"] = rrmh::state_json(rec)["calls"];
    write_json(dir / "report.json", report);

    if (cfg.sampler == rrmh::SamplerKind::mh && !baseline) baseline = tables.size();
    tables.push_back(std::move(table));
    names.push_back(cfg.name);
    if (status == kExitSolver) break;
  }

  if (suite) {
    rrmh::ReportOptions ro;
    ro.burn_in = configs.front().burn_in;
    ro.baseline = baseline;
    json report = rrmh::make_report(tables, ro);
    json ladder = json::array();
    std::optional<double> prev;
    bool increasing = true;
    for (std::size_t i = 0; i < tables.size(); ++i) {
      report["chains"][i]["name"] = names[i];
      const json& b = report["chains"][i]["beta_bar"];
      if (!b.is_number()) continue;
      ladder.push_back({{"name", names[i]}, {"beta_bar", b}});
      if (prev && !(b.get<double>() > *prev)) increasing = false;
      prev = b.get<double>();
    }
    report["beta_ordering"] = ladder;
    report["beta_strictly_increasing"] = increasing;
    fs::create_directories(root);
    write_json(root / "suite_report.json", report);
    std::cout << rrmh::report_table(report);
  }
  return status;
}

int cmd_report(const std::vector<std::string>& files, const std::string& baseline_file,
               std::optional<double> t_star, std::optional<double> t, double burn_in,
               const std::string& out_dir) {
  std::vector<rrmh::ChainTable> tables;
  rrmh::ReportOptions ro;
  ro.burn_in = burn_in;
  ro.t_star = t_star;
  ro.t = t;
  if (!baseline_file.empty()) {
    tables.push_back(rrmh::read_chain_csv(baseline_file));
    ro.baseline = 0;
  }
  for (const auto& f : files) {
    if (f == baseline_file) continue;
    tables.push_back(rrmh::read_chain_csv(f));
  }
  const fs::path dir = out_dir.empty() ? fs::path(files.front()).parent_path() : fs::path(out_dir);
  ro.artifact_dir = dir.empty() ? "." : dir.string();
  const json report = rrmh::make_report(tables, ro);
  write_json(fs::path(ro.artifact_dir) / "report.json", report);
  std::cout << rrmh::report_table(report);
  return 0;
}

int cmd_fit_prior_eem(const std::string& config_path) {
  const rrmh::ExperimentConfig cfg = rrmh::parse_config(rrmh::load_json_file(config_path));
  const auto problem = rrmh::models::build_problem(cfg.model);
  rrmh::ForwardPair pair(problem.model);
  rrmh::RandomStream rng = rrmh::RandomStream(cfg.seed).split(1);
  const std::size_t L = cfg.prior_eem_draws.value_or(1000);
  const rrmh::EemState eem = rrmh::fit_prior_eem(pair, problem.prior, L, rng, cfg.approx.gain_enabled);
  const fs::path dir = resolve_output(cfg.output_dir);
  fs::create_directories(dir);
  json j = rrmh::eem_to_json(eem);
  j["draws"] = L;
  j["exact_calls"] = pair.exact_calls();
  j["reduced_calls"] = pair.reduced_calls();
  write_json(dir / "prior_eem.json", j);
  std::cout << "prior EEM from " << L << " draws written to " << (dir / "prior_eem.json").string()
            << "\n|mu_b| = " << eem.mu_b.norm() << ", trace(Sigma_b) = " << eem.sigma_b.trace() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized reduced-model Metropolis-Hastings experiments"};
  app.require_subcommand(1);
  std::string verbosity = "warning";
  app.add_option("--log-level", verbosity, "debug, info, warning, error or off");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment or suite config");
  run->add_option("config", config_path, "Experiment JSON")->required();

  std::vector<std::string> files;
  std::string baseline;
  std::optional<double> t_star, t;
  double burn_in = 0.2;
  std::string out_dir;
  auto* rep = app.add_subcommand("report", "Summarize chain files");
  rep->add_option("chains", files, "Chain CSV files")->required();
  rep->add_option("--baseline", baseline, "MH chain used as the speedup baseline");
  rep->add_option("--t-star", t_star, "Reduced-model cost (overrides measured median)");
  rep->add_option("--t", t, "Exact-model cost (overrides measured median)");
  rep->add_option("--burn-in", burn_in, "Fraction of steps discarded")->check(CLI::Range(0.0, 0.99));
  rep->add_option("--out", out_dir, "Directory for report.json and plot CSVs");

  std::string fit_path;
  auto* fit = app.add_subcommand("fit-prior-eem", "Fit the error model over prior draws");
  fit->add_option("config", fit_path, "Experiment JSON")->required();

  double tau_mh = 0, tau_da = 0, alpha = 0, s_star = 0, s_t = 0;
  auto* su = app.add_subcommand("speedup", "Evaluate the speedup formula");
  su->add_option("--tau-mh", tau_mh)->required();
  su->add_option("--tau-da", tau_da)->required();
  su->add_option("--alpha", alpha)->required();
  su->add_option("--t-star", s_star)->required();
  su->add_option("--t", s_t)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  if (verbosity == "debug") rrmh::set_log_level(rrmh::LogLevel::debug);
  else if (verbosity == "info") rrmh::set_log_level(rrmh::LogLevel::info);
  else if (verbosity == "error") rrmh::set_log_level(rrmh::LogLevel::error);
  else if (verbosity == "off") rrmh::set_log_level(rrmh::LogLevel::off);

  try {
    if (*run) return cmd_run(config_path);
    if (*rep) return cmd_report(files, baseline, t_star, t, burn_in, out_dir);
    if (*fit) return cmd_fit_prior_eem(fit_path);
    if (*su) {
      std::cout << rrmh::speedup(tau_mh, tau_da, alpha, s_star, s_t) << "\n";
      return 0;
    }
  } catch (const rrmh::ConfigError& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInput;
  } catch (const rrmh::FormatError& e) {
    std::cerr << "malformed input: " << e.what() << "\n";
    return kExitInput;
  } catch (const rrmh::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

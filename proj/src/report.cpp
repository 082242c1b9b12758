#include "rrmh/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rrmh {

using nlohmann::json;

namespace {

std::optional<double> median(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  const std::size_t k = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  double med = v[k];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
    med = 0.5 * (med + lo);
  }
  return med;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Summary {
  json j;
  std::optional<double> tau;
  double alpha_bar = 0.0;
  std::optional<double> t_star_over_t;
  bool delayed = false;
};

Summary summarize(const ChainTable& t, const ReportOptions& opts) {
  Summary s;
  const std::size_t steps = t.rows.size() - 1;
  const std::size_t first =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(opts.burn_in * static_cast<double>(steps))) + 1);
  s.delayed = t.any_stage2 || t.has_shadow;

  std::vector<StepFlags> flags;
  std::vector<double> loglik, tr, te;
  for (std::size_t i = first; i < t.rows.size(); ++i) {
    const auto& o = t.rows[i].outcome;
    flags.push_back({o.stage1_accepted, o.stage2_evaluated, o.stage2_accepted, o.beta});
    loglik.push_back(t.rows[i].log_lik);
  }
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const auto& o = t.rows[i].outcome;
    if (o.t_reduced.count() > 0) tr.push_back(static_cast<double>(o.t_reduced.count()));
    if (o.t_exact) te.push_back(static_cast<double>(o.t_exact->count()));
  }

  json& j = s.j;
  j["file"] = t.path;
  j["sampler"] = s.delayed ? "da" : "mh";
  j["steps"] = steps;
  j["rows_used"] = flags.size();
  if (flags.empty()) {
    j["error"] = "no post-burn-in steps";
    return s;
  }
  const AcceptanceSummary acc = acceptance_summary(flags);
  s.alpha_bar = acc.alpha_bar;
  j["alpha_bar"] = acc.alpha_bar;
  j["beta_bar"] = s.delayed ? opt(acc.beta_bar) : json("n/a");
  j["beta_mean_prob"] = s.delayed ? opt(acc.beta_mean_prob) : json("n/a");
  j["promoted"] = acc.promoted;

  try {
    const IactResult r = iact(loglik);
    s.tau = r.tau;
    j["iact_loglik"] = r.tau;
    j["iact_window"] = r.window;
    j["iact_degenerate"] = r.degenerate;
    j["ess"] = ess(static_cast<double>(loglik.size()), r.tau);
  } catch (const InsufficientDataError& e) {
    j["iact_loglik"] = nullptr;
    j["ess"] = nullptr;
    j["iact_note"] = e.what();
  }

  const auto med_r = median(tr), med_e = median(te);
  j["t_reduced_median_ns"] = opt(med_r);
  j["t_exact_median_ns"] = opt(med_e);
  if (opts.t_star && opts.t) {
    s.t_star_over_t = *opts.t_star / *opts.t;
  } else if (med_r && med_e && *med_e > 0.0) {
    s.t_star_over_t = *med_r / *med_e;
  }
  j["t_star_over_t"] = s.delayed ? opt(s.t_star_over_t) : json("n/a");

  json table = json::array();
  json compare = json::array();
  for (Index c = 0; c < t.dim; ++c) {
    std::vector<double> xs, sh;
    for (std::size_t i = first; i < t.rows.size(); ++i) {
      xs.push_back(t.rows[i].x[c]);
      if (t.has_shadow) sh.push_back((*t.rows[i].shadow_x)[c]);
    }
    json row;
    row["component"] = c;
    try {
      const SeriesStats st = mc_estimate(xs);
      row["mean"] = st.mean;
      row["mc_stderr"] = st.mc_stderr;
      row["iact"] = st.iact;
    } catch (const InsufficientDataError& e) {
      row["note"] = e.what();
    }
    table.push_back(row);
    if (t.has_shadow) {
      json cj;
      cj["component"] = c;
      try {
        const EstimateComparison cmp = compare_estimates(xs, sh);
        cj["g_bar_exact"] = cmp.exact.mean;
        cj["g_bar_approx"] = cmp.approx.mean;
        cj["gap"] = cmp.gap;
        cj["combined_stderr"] = cmp.combined_stderr;
        cj["z"] = cmp.z;
      } catch (const InsufficientDataError& e) {
        cj["note"] = e.what();
      }
      compare.push_back(cj);
    }
  }
  j["estimate_table"] = table;
  if (t.has_shadow) j["compare_estimates"] = compare;
  return s;
}

void write_artifacts(const ChainTable& t, const ReportOptions& opts, const std::string& stem) {
  namespace fs = std::filesystem;
  const fs::path dir(opts.artifact_dir);
  fs::create_directories(dir);
  const std::size_t steps = t.rows.size() - 1;
  const std::size_t first =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(opts.burn_in * static_cast<double>(steps))) + 1);
  std::vector<std::vector<double>> series(static_cast<std::size_t>(t.dim) + 1);
  for (std::size_t i = first; i < t.rows.size(); ++i) {
    series[0].push_back(t.rows[i].log_lik);
    for (Index c = 0; c < t.dim; ++c) series[static_cast<std::size_t>(c) + 1].push_back(t.rows[i].x[c]);
  }
  if (series[0].empty()) return;

  {
    std::ofstream out(dir / (stem + "_acf.csv"));
    out << "lag,log_lik";
    for (Index c = 0; c < t.dim; ++c) out << ",x" << c;
    out << '\n';
    std::vector<std::vector<double>> rho;
    for (const auto& s : series) rho.push_back(acf(s, opts.acf_lags));
    for (std::size_t k = 0; k < rho[0].size(); ++k) {
      out << k;
      for (const auto& r : rho) out << ',' << fmt(r[k]);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / (stem + "_trace.csv"));
    out << "step,log_lik";
    for (Index c = 0; c < t.dim; ++c) out << ",x" << c;
    out << '\n';
    const std::size_t thin = std::max<std::size_t>(opts.thin, 1);
    for (std::size_t i = 0; i < t.rows.size(); i += thin) {
      out << i << ',' << fmt(t.rows[i].log_lik);
      for (Index c = 0; c < t.dim; ++c) out << ',' << fmt(t.rows[i].x[c]);
      out << '\n';
    }
  }
  for (Index c = 0; c < t.dim; ++c) {
    const Histogram h = histogram(series[static_cast<std::size_t>(c) + 1], opts.bins);
    std::ofstream out(dir / (stem + "_hist_x" + std::to_string(c) + ".csv"));
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
    }
  }
}

}  // namespace

json make_report(const std::vector<ChainTable>& chains, const ReportOptions& opts) {
  if (chains.empty()) throw InsufficientDataError("report: no chain files");
  if (opts.baseline && *opts.baseline >= chains.size()) throw Error("report: baseline index out of range");
  std::vector<Summary> sums;
  for (const auto& t : chains) sums.push_back(summarize(t, opts));

  json report;
  report["burn_in"] = opts.burn_in;
  json list = json::array();
  for (std::size_t i = 0; i < chains.size(); ++i) {
    json j = sums[i].j;
    if (opts.baseline && i != *opts.baseline && sums[i].delayed) {
      const Summary& b = sums[*opts.baseline];
      json inputs;
      inputs["tau_mh"] = opt(b.tau);
      inputs["tau_da"] = opt(sums[i].tau);
      inputs["alpha_bar"] = sums[i].alpha_bar;
      inputs["t_star_over_t"] = opt(sums[i].t_star_over_t);
      inputs["t_source"] = opts.t_star && opts.t ? "supplied" : "measured";
      j["speedup_inputs"] = inputs;
      if (b.tau && sums[i].tau && sums[i].t_star_over_t) {
        j["speedup"] = speedup(*b.tau, *sums[i].tau, sums[i].alpha_bar, *sums[i].t_star_over_t, 1.0);
      } else {
        j["speedup"] = nullptr;
      }
    }
    if (!opts.artifact_dir.empty()) {
      const std::string stem = std::filesystem::path(chains[i].path).stem().string() + "_" + std::to_string(i);
      write_artifacts(chains[i], opts, stem);
      j["artifact_stem"] = stem;
    }
    list.push_back(j);
  }
  report["chains"] = list;
  if (opts.baseline) report["baseline"] = chains[*opts.baseline].path;
  return report;
}

std::string report_table(const json& report) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-36s %-4s %8s %8s %10s %10s %9s %8s\n", "chain", "kind", "alpha",
                "beta", "iact(ll)", "ess", "t*/t", "speedup");
  os << buf;
  auto num = [](const json& v, const char* f) -> std::string {
    if (!v.is_number()) return v.is_string() ? v.get<std::string>() : "-";
    char b[32];
    std::snprintf(b, sizeof b, f, v.get<double>());
    return b;
  };
  for (const auto& c : report.at("chains")) {
    std::string name = std::filesystem::path(c.value("file", "")).filename().string();
    if (name.size() > 36) name = name.substr(name.size() - 36);
    std::snprintf(buf, sizeof buf, "%-36s %-4s %8s %8s %10s %10s %9s %8s\n", name.c_str(),
                  c.value("sampler", "?").c_str(), num(c.value("alpha_bar", json()), "%.3f").c_str(),
                  num(c.value("beta_bar", json()), "%.3f").c_str(),
                  num(c.value("iact_loglik", json()), "%.2f").c_str(),
                  num(c.value("ess", json()), "%.1f").c_str(),
                  num(c.value("t_star_over_t", json()), "%.4f").c_str(),
                  num(c.value("speedup", json()), "%.2f").c_str());
    os << buf;
  }
  return os.str();
}

}  // namespace rrmh

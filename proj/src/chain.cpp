#include "rrmh/chain.hpp"

#include "rrmh/log.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rrmh {

using nlohmann::json;

// ---------------------------------------------------------------- record helpers

std::size_t ChainRecord::stage1_accepts() const {
  std::size_t n = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) n += rows[i].outcome.stage1_accepted ? 1 : 0;
  return n;
}

namespace {

std::size_t first_row(std::size_t burn_in_rows, bool after_burn_in) {
  return after_burn_in ? std::max<std::size_t>(burn_in_rows, 1) : 1;
}

StepFlags to_flags(const StepOutcome& o) {
  return {o.stage1_accepted, o.stage2_evaluated, o.stage2_accepted, o.beta};
}

}  // namespace

std::vector<StepFlags> ChainRecord::flags(bool after_burn_in) const {
  std::vector<StepFlags> out;
  for (std::size_t i = first_row(burn_in_rows, after_burn_in); i < rows.size(); ++i) {
    out.push_back(to_flags(rows[i].outcome));
  }
  return out;
}

std::vector<double> ChainRecord::component(Index c, bool shadow, bool after_burn_in) const {
  std::vector<double> out;
  for (std::size_t i = first_row(burn_in_rows, after_burn_in); i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (shadow) {
      if (!r.shadow_x) throw InsufficientDataError("shadow chain not logged");
      out.push_back((*r.shadow_x)[c]);
    } else {
      out.push_back(r.x[c]);
    }
  }
  return out;
}

std::vector<double> ChainRecord::log_lik_series(bool after_burn_in) const {
  std::vector<double> out;
  for (std::size_t i = first_row(burn_in_rows, after_burn_in); i < rows.size(); ++i) {
    out.push_back(rows[i].log_lik);
  }
  return out;
}

// ---------------------------------------------------------------- runner

namespace {

/// Wraps a model so that the exact map fails after a set number of calls.
class FailingModel final : public ForwardModel {
 public:
  FailingModel(std::shared_ptr<const ForwardModel> inner, std::uint64_t limit)
      : inner_(std::move(inner)), limit_(limit) {}
  Index param_dim() const override { return inner_->param_dim(); }
  Index data_dim() const override { return inner_->data_dim(); }
  DataVector exact(const ParameterVector& x) const override {
    if (calls_.fetch_add(1) >= limit_) throw SolverError("injected solver failure");
    return inner_->exact(x);
  }
  DataVector reduced(const ParameterVector& x) const override { return inner_->reduced(x); }
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<const ForwardModel> inner_;
  std::uint64_t limit_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

ProposalState make_proposal(const ProposalConfig& pc, const ParameterVector& x0) {
  if (pc.kind == ProposalKind::am) return ProposalState::am(x0, pc.mix_eps);
  std::vector<std::vector<Index>> groups = pc.groups;
  if (groups.empty()) {
    groups.emplace_back();
    for (Index i = 0; i < x0.size(); ++i) groups.back().push_back(i);
  }
  return ProposalState::gcam(x0, groups, pc.target_acceptance, pc.mix_eps);
}

}  // namespace

ChainRecord run_chain(const ExperimentConfig& cfg) {
  return run_chain(cfg, models::build_problem(cfg.model));
}

ChainRecord run_chain(const ExperimentConfig& cfg, const models::Problem& problem) {
  ChainRecord rec;
  rec.name = cfg.name;
  rec.config_hash = config_hash(cfg.canonical.is_null() ? json::object() : cfg.canonical);
  rec.sampler = cfg.sampler;
  rec.approx = cfg.approx;

  std::shared_ptr<const ForwardModel> model = problem.model;
  if (cfg.fail_after_exact_calls) {
    model = std::make_shared<FailingModel>(model, *cfg.fail_after_exact_calls);
  }
  const Index d = model->param_dim();
  const Index m = model->data_dim();
  rec.dim = d;

  ForwardPair main_pair(model);
  ForwardPair shadow_pair(model);
  ForwardPair fit_pair(model);
  const PosteriorView view{main_pair, problem.noise, problem.prior, problem.d_obs};

  RandomStream rng(cfg.seed);
  RandomStream fit_rng = rng.split(1);

  const ParameterVector x0 = cfg.init ? *cfg.init : problem.x_init;
  require_dim(x0.size(), d, "initial state");
  const bool delayed = cfg.sampler != SamplerKind::mh;

  auto finish_counts = [&]() {
    rec.exact_calls = main_pair.exact_calls();
    rec.reduced_calls = main_pair.reduced_calls();
    rec.shadow_exact_calls = shadow_pair.exact_calls();
    rec.shadow_reduced_calls = shadow_pair.reduced_calls();
    rec.prior_fit_exact_calls = fit_pair.exact_calls();
    rec.rng_counter = rng.counter();
  };

  EemState eem = EemState::identity(m);
  ChainState state;
  try {
    if (delayed && (cfg.approx.eem_source == EemSource::prior_fitted || cfg.approx.gain_enabled)) {
      const EemState fitted = fit_prior_eem(fit_pair, problem.prior, cfg.prior_eem_draws.value_or(2),
                                            fit_rng, cfg.approx.gain_enabled);
      if (cfg.approx.eem_source == EemSource::prior_fitted) {
        eem = fitted;
      } else {
        eem.gain = fitted.gain;
      }
    }
    state = initial_state(x0, view, delayed);
  } catch (const SolverError& e) {
    rec.error = e.what();
    finish_counts();
    return rec;
  }
  rec.initial_eem = eem;

  ProposalState proposal = make_proposal(cfg.proposal, x0);
  const std::size_t n_steps = cfg.steps;
  rec.burn_in_rows = static_cast<std::size_t>(std::floor(cfg.burn_in * static_cast<double>(n_steps))) + 1;
  rec.rows.reserve(n_steps + 1);

  ShadowState shadow;
  if (cfg.shadow) shadow = shadow_initial(state);
  {
    ChainRow r0;
    r0.x = state.x;
    r0.log_post = state.log_post;
    r0.log_lik = state.log_lik;
    if (cfg.shadow) r0.shadow_x = shadow.x;
    rec.rows.push_back(std::move(r0));
  }

  const ExactTarget exact_target = [&](const ParameterVector& y) {
    return evaluate_exact(y, main_pair, problem.noise, problem.prior, problem.d_obs);
  };
  std::optional<ApproxDensity> approx;
  std::size_t approx_count = 0;

  for (std::size_t n = 1; n <= n_steps; ++n) {
    const bool adapting = !cfg.proposal.adapt_until || n < *cfg.proposal.adapt_until;
    const bool adapt_proposal_now = cfg.proposal.adapt && adapting;
    ChainRow row;
    try {
      const StepRandomness rnd = draw_step(proposal, rng);
      if (!delayed) {
        auto [next, out] = mh_step_with(state, exact_target, rnd);
        state = std::move(next);
        row.outcome = out;
        if (adapt_proposal_now) {
          proposal = adapt_proposal(std::move(proposal), state.x, out.group, out.stage1_accepted);
        }
      } else {
        if (!approx || eem.count != approx_count) {
          approx.emplace(cfg.approx, eem, problem.noise, problem.prior, problem.d_obs);
          approx_count = eem.count;
        }
        if (cfg.shadow) shadow = shadow_step(shadow, *approx, shadow_pair, problem.prior, rnd);
        const AdaptationSwitch sw{adapt_proposal_now, cfg.sampler == SamplerKind::ada && adapting};
        AdaStep a = ada_step_with(state, cfg.approx, eem, *approx, view, proposal, rnd, sw);
        if (a.eem.count != eem.count) {
          rec.eem_trace.push_back({n, a.eem.count, (a.eem.sigma_b - eem.sigma_b).norm(),
                                   a.residual ? a.residual->squaredNorm() : 0.0});
        }
        if (a.outcome.stage2_accepted && a.residual) rec.accepted_residuals.emplace_back(n, *a.residual);
        state = std::move(a.state);
        eem = std::move(a.eem);
        proposal = std::move(a.proposal);
        row.outcome = a.outcome;
      }
      if (proposal.kind == ProposalKind::gcam && adapt_proposal_now) {
        rec.scale_trace.emplace_back(proposal.step_count, std::abs(proposal.last_log_scale_delta));
      }
    } catch (const SolverError& e) {
      rec.error = "step " + std::to_string(n) + ": " + e.what();
      log_warning("chain '" + cfg.name + "' stopped: " + *rec.error);
      break;
    }
    row.x = state.x;
    row.log_lik = state.log_lik;
    if (row.outcome.t_exact) row.log_post = state.log_post;
    if (cfg.shadow) row.shadow_x = shadow.x;
    rec.rows.push_back(std::move(row));
  }

  rec.final_eem = eem;
  rec.final_proposal = proposal;
  finish_counts();
  return rec;
}

// ---------------------------------------------------------------- CSV

namespace {

void put_double(std::string& s, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

}  // namespace

void write_chain_csv(const ChainRecord& record, const std::string& path, bool timings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write chain file " + path);
  const bool has_shadow = !record.rows.empty() && record.rows.front().shadow_x.has_value();
  std::string line = "step";
  for (Index i = 0; i < record.dim; ++i) line += ",x" + std::to_string(i);
  line += ",log_post,log_lik,stage1_accepted,stage2_evaluated,stage2_accepted,alpha,beta,"
          "t_reduced_ns,t_exact_ns";
  if (has_shadow) {
    for (Index i = 0; i < record.dim; ++i) line += ",shadow_x" + std::to_string(i);
  }
  out << line << '\n';
  for (std::size_t s = 0; s < record.rows.size(); ++s) {
    const ChainRow& r = record.rows[s];
    const StepOutcome& o = r.outcome;
    line = std::to_string(s);
    for (Index i = 0; i < record.dim; ++i) {
      line += ',';
      put_double(line, r.x[i]);
    }
    line += ',';
    if (r.log_post) put_double(line, *r.log_post);
    line += ',';
    put_double(line, r.log_lik);
    line += o.stage1_accepted ? ",1" : ",0";
    line += o.stage2_evaluated ? ",1" : ",0";
    line += o.stage2_accepted ? ",1" : ",0";
    line += ',';
    put_double(line, s == 0 ? 0.0 : o.alpha);
    line += ',';
    if (o.beta) put_double(line, *o.beta);
    line += ',';
    if (timings && s > 0) line += std::to_string(o.t_reduced.count());
    line += ',';
    if (timings && o.t_exact) line += std::to_string(o.t_exact->count());
    if (has_shadow) {
      for (Index i = 0; i < record.dim; ++i) {
        line += ',';
        put_double(line, (*r.shadow_x)[i]);
      }
    }
    out << line << '\n';
  }
  if (!out) throw Error("error writing chain file " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  if (s.empty()) throw FormatError(where + ": empty numeric field");
  const char* b = s.c_str();
  char* e = nullptr;
  const double v = std::strtod(b, &e);
  if (e != b + s.size()) throw FormatError(where + ": not a number '" + s + "'");
  return v;
}

bool parse_flag(const std::string& s, const std::string& where) {
  if (s == "0") return false;
  if (s == "1") return true;
  throw FormatError(where + ": expected 0 or 1, got '" + s + "'");
}

}  // namespace

ChainTable read_chain_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open chain file " + path);
  ChainTable t;
  t.path = path;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  const auto header = split_csv(line);
  const std::vector<std::string> fixed = {"log_post",         "log_lik",        "stage1_accepted",
                                          "stage2_evaluated", "stage2_accepted", "alpha",
                                          "beta",             "t_reduced_ns",   "t_exact_ns"};
  if (header.empty() || header[0] != "step") throw FormatError(path + ":1: first column must be 'step'");
  std::size_t col = 1;
  while (col < header.size() && header[col] == "x" + std::to_string(col - 1)) ++col;
  t.dim = static_cast<Index>(col - 1);
  if (t.dim == 0) throw FormatError(path + ":1: no parameter columns");
  for (const auto& f : fixed) {
    if (col >= header.size() || header[col] != f) {
      throw FormatError(path + ":1: expected column '" + f + "'");
    }
    ++col;
  }
  if (col < header.size()) {
    for (Index i = 0; i < t.dim; ++i, ++col) {
      if (col >= header.size() || header[col] != "shadow_x" + std::to_string(i)) {
        throw FormatError(path + ":1: malformed shadow columns");
      }
    }
    t.has_shadow = true;
  }
  if (col != header.size()) throw FormatError(path + ":1: unexpected trailing columns");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw FormatError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(f.size()));
    }
    if (parse_number(f[0], where) != static_cast<double>(t.rows.size())) {
      throw FormatError(where + ": step indices must start at 0 and increase by 1");
    }
    ChainRow r;
    r.x.resize(t.dim);
    std::size_t c = 1;
    for (Index i = 0; i < t.dim; ++i) r.x[i] = parse_number(f[c++], where);
    if (!f[c].empty()) r.log_post = parse_number(f[c], where);
    ++c;
    r.log_lik = parse_number(f[c++], where);
    auto& o = r.outcome;
    o.stage1_accepted = parse_flag(f[c++], where);
    o.stage2_evaluated = parse_flag(f[c++], where);
    o.stage2_accepted = parse_flag(f[c++], where);
    o.alpha = parse_number(f[c++], where);
    if (!f[c].empty()) o.beta = parse_number(f[c], where);
    ++c;
    if (!f[c].empty()) o.t_reduced = std::chrono::nanoseconds(static_cast<std::int64_t>(parse_number(f[c], where)));
    ++c;
    if (!f[c].empty()) o.t_exact = std::chrono::nanoseconds(static_cast<std::int64_t>(parse_number(f[c], where)));
    ++c;
    if (o.stage2_evaluated && !o.stage1_accepted) {
      throw FormatError(where + ": stage 2 evaluated without stage-1 acceptance");
    }
    if (t.has_shadow) {
      r.shadow_x = Vector(t.dim);
      for (Index i = 0; i < t.dim; ++i) (*r.shadow_x)[i] = parse_number(f[c++], where);
    }
    t.any_stage2 = t.any_stage2 || o.stage2_evaluated;
    t.rows.push_back(std::move(r));
  }
  if (t.rows.empty()) throw FormatError(path + ": no rows");
  return t;
}

// ---------------------------------------------------------------- JSON state

json eem_to_json(const EemState& eem) {
  const Index m = eem.dim();
  std::vector<double> sigma;
  sigma.reserve(static_cast<std::size_t>(m * m));
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < m; ++j) sigma.push_back(eem.sigma_b(i, j));
  }
  json j;
  j["mu_b"] = std::vector<double>(eem.mu_b.data(), eem.mu_b.data() + m);
  j["sigma_b"] = sigma;
  j["gain"] = std::vector<double>(eem.gain.data(), eem.gain.data() + m);
  j["count"] = eem.count;
  json pending = json::array();
  for (const auto& p : eem.pending) pending.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  j["pending"] = pending;
  return j;
}

EemState eem_from_json(const json& j) {
  try {
    const auto mu = j.at("mu_b").get<std::vector<double>>();
    const auto sigma = j.at("sigma_b").get<std::vector<double>>();
    const auto gain = j.at("gain").get<std::vector<double>>();
    const auto m = static_cast<Index>(mu.size());
    if (sigma.size() != mu.size() * mu.size() || gain.size() != mu.size()) {
      throw FormatError("eem: inconsistent dimensions");
    }
    EemState s = EemState::identity(m);
    s.mu_b = Eigen::Map<const Vector>(mu.data(), m);
    s.sigma_b = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        sigma.data(), m, m);
    s.gain = Eigen::Map<const Vector>(gain.data(), m);
    s.count = j.at("count").get<std::size_t>();
    if (j.contains("pending")) {
      for (const auto& p : j.at("pending")) {
        const auto v = p.get<std::vector<double>>();
        s.pending.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())));
      }
    }
    return s;
  } catch (const json::exception& e) {
    throw FormatError(std::string("eem: ") + e.what());
  }
}

json state_json(const ChainRecord& rec) {
  json j;
  j["name"] = rec.name;
  j["config_hash"] = rec.config_hash;
  j["sampler"] = std::string(to_string(rec.sampler));
  j["approx"] = {{"kind", std::string(to_string(rec.approx.kind))},
                 {"eem_source", std::string(to_string(rec.approx.eem_source))},
                 {"gain_enabled", rec.approx.gain_enabled}};
  j["steps"] = rec.steps();
  j["rows"] = rec.rows.size();
  j["burn_in_rows"] = rec.burn_in_rows;
  j["rng_counter"] = rec.rng_counter;
  j["calls"] = {{"exact", rec.exact_calls},
                {"reduced", rec.reduced_calls},
                {"shadow_exact", rec.shadow_exact_calls},
                {"shadow_reduced", rec.shadow_reduced_calls},
                {"prior_fit_exact", rec.prior_fit_exact_calls},
                {"stage1_accepts", rec.stage1_accepts()}};
  j["eem"] = eem_to_json(rec.final_eem);
  const ProposalState& p = rec.final_proposal;
  json pj;
  pj["kind"] = std::string(to_string(p.kind));
  const Index d = p.dim();
  pj["emp_mean"] = std::vector<double>(p.emp_mean.data(), p.emp_mean.data() + d);
  std::vector<double> cov;
  for (Index a = 0; a < d; ++a) {
    for (Index b = 0; b < d; ++b) cov.push_back(p.emp_cov(a, b));
  }
  pj["emp_cov"] = cov;
  pj["samples"] = p.samples;
  pj["step_count"] = p.step_count;
  pj["mix_eps"] = p.mix_eps;
  json groups = json::array();
  for (const auto& g : p.groups) {
    groups.push_back({{"indices", g.indices},
                      {"log_scale", g.log_scale},
                      {"proposals", g.proposals},
                      {"accepts", g.accepts}});
  }
  pj["groups"] = groups;
  j["proposal"] = pj;
  j["error"] = rec.error ? json(*rec.error) : json(nullptr);
  return j;
}

void write_state_json(const ChainRecord& record, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write state file " + path);
  out << state_json(record).dump(2) << '\n';
}

}  // namespace rrmh

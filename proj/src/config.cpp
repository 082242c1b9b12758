#include "rrmh/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

namespace rrmh {

using nlohmann::json;

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::mh: return "mh";
    case SamplerKind::da: return "da";
    case SamplerKind::ada: return "ada";
  }
  return "?";
}

namespace {

/// Typed accessors that report JSON-pointer paths.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) throw ConfigError(path_ + "/" + it.key(), "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  std::string at(const char* key) const { return path_ + "/" + key; }
  const json& raw(const char* key) const { return j_.at(key); }

  std::string str(const char* key, std::string def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }

  double number(const char* key, double def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "must be finite");
    return d;
  }

  std::uint64_t uint(const char* key, std::uint64_t def) const {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::vector<double> numbers(const char* key) const {
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Reader child(const char* key) const { return Reader(j_.at(key), at(key)); }

 private:
  const json& j_;
  std::string path_;
};

const json& empty_object() {
  static const json e = json::object();
  return e;
}

models::ModelConfig parse_model(const Reader& r) {
  r.allow({"kind", "data_seed", "noise_sd", "x_true", "d", "m", "rel_error", "matrix_seed",
           "fine_cells", "coarse_cells", "fine_steps", "coarse_steps", "sensors", "obs_interval",
           "n_times", "n_basis", "calibrate", "snr", "use_mesh_files"});
  models::ModelConfig m;
  m.kind = r.str("kind", m.kind);
  if (m.kind != "linear_gaussian" && m.kind != "diffusion" && m.kind != "ect") {
    throw ConfigError(r.at("kind"), "expected linear_gaussian, diffusion or ect");
  }
  m.data_seed = r.uint("data_seed", m.data_seed);
  if (r.has("noise_sd")) {
    m.noise_sd = r.number("noise_sd", 0.0);
    if (!(*m.noise_sd > 0.0)) throw ConfigError(r.at("noise_sd"), "must be positive");
  }
  if (r.has("x_true")) m.x_true = r.numbers("x_true");

  m.linear.d = static_cast<Index>(r.uint("d", static_cast<std::uint64_t>(m.linear.d)));
  m.linear.m = static_cast<Index>(r.uint("m", static_cast<std::uint64_t>(m.linear.m)));
  if (m.linear.d < 1) throw ConfigError(r.at("d"), "must be >= 1");
  if (m.linear.m < 1) throw ConfigError(r.at("m"), "must be >= 1");
  m.linear.rel_error = r.number("rel_error", m.linear.rel_error);
  m.linear.seed = r.uint("matrix_seed", m.linear.seed);

  auto& df = m.diffusion;
  df.fine.cells = static_cast<int>(r.uint("fine_cells", static_cast<std::uint64_t>(df.fine.cells)));
  df.coarse.cells = static_cast<int>(r.uint("coarse_cells", static_cast<std::uint64_t>(df.coarse.cells)));
  df.fine.steps_per_interval =
      static_cast<int>(r.uint("fine_steps", static_cast<std::uint64_t>(df.fine.steps_per_interval)));
  df.coarse.steps_per_interval =
      static_cast<int>(r.uint("coarse_steps", static_cast<std::uint64_t>(df.coarse.steps_per_interval)));
  if (df.fine.cells < 2) throw ConfigError(r.at("fine_cells"), "must be >= 2");
  if (df.coarse.cells < 2) throw ConfigError(r.at("coarse_cells"), "must be >= 2");
  if (df.fine.cells % df.coarse.cells != 0) {
    throw ConfigError(r.at("coarse_cells"), "must divide fine_cells");
  }
  if (df.fine.steps_per_interval < 1) throw ConfigError(r.at("fine_steps"), "must be >= 1");
  if (df.coarse.steps_per_interval < 1) throw ConfigError(r.at("coarse_steps"), "must be >= 1");
  if (r.has("sensors")) {
    df.sensors = r.numbers("sensors");
    for (double s : df.sensors) {
      if (!(s > 0.0 && s < 1.0)) throw ConfigError(r.at("sensors"), "sensor locations must lie in (0, 1)");
    }
    if (df.sensors.empty()) throw ConfigError(r.at("sensors"), "must not be empty");
  }
  df.obs_interval = r.number("obs_interval", df.obs_interval);
  if (!(df.obs_interval > 0.0)) throw ConfigError(r.at("obs_interval"), "must be positive");
  df.n_times = static_cast<int>(r.uint("n_times", static_cast<std::uint64_t>(df.n_times)));
  if (df.n_times < 1) throw ConfigError(r.at("n_times"), "must be >= 1");
  df.n_basis = static_cast<int>(r.uint("n_basis", static_cast<std::uint64_t>(df.n_basis)));
  if (df.n_basis < 1) throw ConfigError(r.at("n_basis"), "must be >= 1");

  m.ect_calibrate = r.boolean("calibrate", m.ect_calibrate);
  m.ect_snr = r.number("snr", m.ect_snr);
  if (!(m.ect_snr > 0.0)) throw ConfigError(r.at("snr"), "must be positive");
  m.ect_use_mesh_files = r.boolean("use_mesh_files", m.ect_use_mesh_files);
  return m;
}

Index model_param_dim(const models::ModelConfig& m) {
  if (m.kind == "linear_gaussian") return m.linear.d;
  if (m.kind == "diffusion") return m.diffusion.n_basis;
  return 5;
}

json model_to_json(const models::ModelConfig& m) {
  json j;
  j["kind"] = m.kind;
  j["data_seed"] = m.data_seed;
  if (m.noise_sd) j["noise_sd"] = *m.noise_sd;
  if (m.x_true) j["x_true"] = *m.x_true;
  if (m.kind == "linear_gaussian") {
    j["d"] = m.linear.d;
    j["m"] = m.linear.m;
    j["rel_error"] = m.linear.rel_error;
    j["matrix_seed"] = m.linear.seed;
  } else if (m.kind == "diffusion") {
    const auto& df = m.diffusion;
    j["fine_cells"] = df.fine.cells;
    j["coarse_cells"] = df.coarse.cells;
    j["fine_steps"] = df.fine.steps_per_interval;
    j["coarse_steps"] = df.coarse.steps_per_interval;
    j["sensors"] = df.sensors;
    j["obs_interval"] = df.obs_interval;
    j["n_times"] = df.n_times;
    j["n_basis"] = df.n_basis;
  } else {
    j["calibrate"] = m.ect_calibrate;
    j["snr"] = m.ect_snr;
    j["use_mesh_files"] = m.ect_use_mesh_files;
  }
  return j;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["model"] = model_to_json(c.model);
  j["sampler"] = std::string(to_string(c.sampler));
  j["approx"] = {{"kind", std::string(to_string(c.approx.kind))},
                 {"eem_source", std::string(to_string(c.approx.eem_source))},
                 {"gain_enabled", c.approx.gain_enabled}};
  json p;
  p["kind"] = std::string(to_string(c.proposal.kind));
  p["groups"] = c.proposal.groups;
  p["target_acceptance"] = c.proposal.target_acceptance;
  p["mix_eps"] = c.proposal.mix_eps;
  p["adapt"] = c.proposal.adapt;
  if (c.proposal.adapt_until) p["adapt_until"] = *c.proposal.adapt_until;
  j["proposal"] = p;
  j["steps"] = c.steps;
  j["burn_in"] = c.burn_in;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  if (c.prior_eem_draws) j["prior_eem"] = {{"draws", *c.prior_eem_draws}};
  j["shadow"] = c.shadow;
  j["record_timings"] = c.record_timings;
  if (c.init) j["init"] = std::vector<double>(c.init->data(), c.init->data() + c.init->size());
  if (c.fail_after_exact_calls) j["fail_after_exact_calls"] = *c.fail_after_exact_calls;
  return j;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  const Reader r(j, "");
  r.allow({"name", "model", "sampler", "approx", "proposal", "steps", "burn_in", "seed",
           "output_dir", "prior_eem", "shadow", "record_timings", "init",
           "fail_after_exact_calls", "suite"});
  ExperimentConfig c;
  c.name = r.str("name", c.name);
  c.model = parse_model(r.has("model") ? r.child("model") : Reader(empty_object(), "/model"));

  const std::string sampler = r.str("sampler", "mh");
  if (sampler == "mh") c.sampler = SamplerKind::mh;
  else if (sampler == "da") c.sampler = SamplerKind::da;
  else if (sampler == "ada") c.sampler = SamplerKind::ada;
  else throw ConfigError("/sampler", "expected mh, da or ada");

  if (r.has("approx")) {
    const Reader a = r.child("approx");
    a.allow({"kind", "eem_source", "gain_enabled"});
    try {
      c.approx.kind = parse_approx_kind(a.str("kind", "approx1"));
    } catch (const Error& e) {
      throw ConfigError("/approx/kind", e.what());
    }
    try {
      c.approx.eem_source = parse_eem_source(a.str(
          "eem_source", c.approx.kind == ApproxKind::approx4 ? "posterior-adaptive" : "none"));
    } catch (const Error& e) {
      throw ConfigError("/approx/eem_source", e.what());
    }
    c.approx.gain_enabled = a.boolean("gain_enabled", false);
    try {
      c.approx.validate();
    } catch (const Error& e) {
      throw ConfigError("/approx", e.what());
    }
  }
  if (c.sampler == SamplerKind::da && c.approx.adaptive()) {
    throw ConfigError("/approx/eem_source", "posterior-adaptive error models need sampler ada");
  }

  const Index d = model_param_dim(c.model);
  if (r.has("proposal")) {
    const Reader p = r.child("proposal");
    p.allow({"kind", "groups", "target_acceptance", "mix_eps", "adapt", "adapt_until"});
    try {
      c.proposal.kind = parse_proposal_kind(p.str("kind", "am"));
    } catch (const Error& e) {
      throw ConfigError("/proposal/kind", e.what());
    }
    if (p.has("groups")) {
      const json& g = p.raw("groups");
      if (!g.is_array()) throw ConfigError("/proposal/groups", "expected an array of index arrays");
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::string gp = "/proposal/groups/" + std::to_string(i);
        if (!g[i].is_array() || g[i].empty()) throw ConfigError(gp, "expected a non-empty index array");
        std::vector<Index> idx;
        for (const auto& v : g[i]) {
          if (!v.is_number_integer()) throw ConfigError(gp, "indices must be integers");
          idx.push_back(v.get<Index>());
        }
        c.proposal.groups.push_back(std::move(idx));
      }
    }
    c.proposal.target_acceptance = p.number("target_acceptance", c.proposal.target_acceptance);
    c.proposal.mix_eps = p.number("mix_eps", c.proposal.mix_eps);
    c.proposal.adapt = p.boolean("adapt", c.proposal.adapt);
    if (p.has("adapt_until")) c.proposal.adapt_until = p.uint("adapt_until", 0);
  }
  {
    // Structural checks on the proposal via the state constructor.
    const ParameterVector x0 = Vector::Zero(d);
    std::vector<std::vector<Index>> groups = c.proposal.groups;
    if (groups.empty()) {
      groups.emplace_back();
      for (Index i = 0; i < d; ++i) groups.back().push_back(i);
    }
    try {
      (void)ProposalState::gcam(x0, groups, c.proposal.target_acceptance, c.proposal.mix_eps);
    } catch (const Error& e) {
      const std::string msg = e.what();
      std::string field = "/proposal/groups";
      if (msg.find("mix_eps") != std::string::npos) field = "/proposal/mix_eps";
      if (msg.find("target") != std::string::npos) field = "/proposal/target_acceptance";
      throw ConfigError(field, msg);
    }
  }

  c.steps = r.uint("steps", c.steps);
  c.burn_in = r.number("burn_in", c.burn_in);
  if (!(c.burn_in >= 0.0 && c.burn_in < 1.0)) throw ConfigError("/burn_in", "must lie in [0, 1)");
  if (!r.has("seed")) throw ConfigError("/seed", "required");
  c.seed = r.uint("seed", 0);
  c.output_dir = r.str("output_dir", c.output_dir);
  if (r.has("prior_eem")) {
    const Reader pe = r.child("prior_eem");
    pe.allow({"draws"});
    c.prior_eem_draws = pe.uint("draws", 1000);
    if (*c.prior_eem_draws < 2) throw ConfigError("/prior_eem/draws", "must be >= 2");
  }
  if (c.sampler != SamplerKind::mh && c.approx.eem_source == EemSource::prior_fitted &&
      !c.prior_eem_draws) {
    throw ConfigError("/prior_eem/draws", "required for a prior-fitted error model");
  }
  if (c.sampler != SamplerKind::mh && c.approx.gain_enabled && !c.prior_eem_draws) {
    throw ConfigError("/prior_eem/draws", "required to fit the gain");
  }
  c.shadow = r.boolean("shadow", c.shadow);
  if (c.shadow && c.sampler == SamplerKind::mh) {
    throw ConfigError("/shadow", "the stage-2-skipping chain needs sampler da or ada");
  }
  c.record_timings = r.boolean("record_timings", c.record_timings);
  if (r.has("init")) {
    const auto v = r.numbers("init");
    if (static_cast<Index>(v.size()) != d) {
      throw ConfigError("/init", "expected " + std::to_string(d) + " values");
    }
    c.init = Eigen::Map<const Vector>(v.data(), d);
  }
  if (r.has("fail_after_exact_calls")) c.fail_after_exact_calls = r.uint("fail_after_exact_calls", 0);
  c.canonical = to_json(c);
  return c;
}

std::vector<ExperimentConfig> parse_suite(const json& j) {
  if (!j.is_object()) throw ConfigError("/", "expected an object");
  if (!j.contains("suite")) return {parse_config(j)};
  const json& suite = j.at("suite");
  if (!suite.is_array() || suite.empty()) throw ConfigError("/suite", "expected a non-empty array");
  json base = j;
  base.erase("suite");
  std::vector<ExperimentConfig> out;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    if (!suite[i].is_object()) throw ConfigError("/suite/" + std::to_string(i), "expected an object");
    json merged = base;
    merged.merge_patch(suite[i]);
    try {
      out.push_back(parse_config(merged));
    } catch (const ConfigError& e) {
      throw ConfigError("/suite/" + std::to_string(i) + e.field(),
                        std::string(e.what()).substr(e.field().size() + 2));
    }
  }
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("/", "cannot read config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
}

std::string config_hash(const json& canonical) {
  json h = canonical;
  h.erase("output_dir");
  const std::string s = h.dump();
  std::uint64_t x = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    x ^= ch;
    x *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
  return buf;
}

}  // namespace rrmh

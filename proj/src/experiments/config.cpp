#include "matchprior/experiments/experiments.hpp"

#include "matchprior/core/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace matchprior::experiments {

namespace {

using nlohmann::json;

const std::pair<ExperimentKind, std::string_view> kKinds[] = {
    {ExperimentKind::LogisticSynthetic, "logistic-synthetic"},
    {ExperimentKind::Banknote, "banknote"},
    {ExperimentKind::PoissonShrinkage, "poisson-shrinkage"},
    {ExperimentKind::CauchyCalibration, "cauchy-calibration"},
    {ExperimentKind::Timing, "timing"},
};

ExperimentKind parse_kind(const std::string& s) {
  for (const auto& [k, name] : kKinds)
    if (name == s) return k;
  fail(ErrorKind::ParseError, "unknown experiment '" + s + "'");
}

std::string default_model(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::LogisticSynthetic:
    case ExperimentKind::Banknote:
      return "logistic";
    case ExperimentKind::PoissonShrinkage:
      return "poisson-sequence";
    case ExperimentKind::CauchyCalibration:
      return "cauchy";
    case ExperimentKind::Timing:
      return "";
  }
  return "";
}

std::string default_prior(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::LogisticSynthetic:
    case ExperimentKind::Banknote:
      return "normal(0,1)";
    case ExperimentKind::PoissonShrinkage:
      return "komaki(3,auto,0.001)";
    case ExperimentKind::CauchyCalibration:
      return "normal(0,100)";
    case ExperimentKind::Timing:
      return "";
  }
  return "";
}

template <class T>
T get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) fail(ErrorKind::ParseError, "unknown key '" + key + "' in " + where);
}

}  // namespace

std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : kKinds)
    if (kind == k) return name;
  return "?";
}

void ExperimentConfig::validate() const {
  const ExperimentKind eff = kind == ExperimentKind::Timing ? timing_target : kind;
  if (timing_target == ExperimentKind::Timing) fail(ErrorKind::InvalidArgument, "timing cannot time itself");
  if (n_grid.empty()) fail(ErrorKind::InvalidArgument, "n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] == 0) fail(ErrorKind::InvalidArgument, "n grid entries must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) fail(ErrorKind::InvalidArgument, "n grid must be strictly increasing");
  }
  if (repetitions < 1) fail(ErrorKind::InvalidArgument, "repetitions must be >= 1");
  if (kind == ExperimentKind::Timing && repetitions < 3)
    fail(ErrorKind::InvalidArgument, "timing needs at least 3 repetitions");
  chain.validate();
  if (eff == ExperimentKind::LogisticSynthetic && scenario != 1 && scenario != 2)
    fail(ErrorKind::InvalidArgument, "scenario must be 1 or 2");
  if (eff == ExperimentKind::Banknote && data.empty()) fail(ErrorKind::InvalidArgument, "banknote needs a data path");
  if (eff == ExperimentKind::PoissonShrinkage) {
    if (generator != "paper-synthetic" && generator != "csv")
      fail(ErrorKind::InvalidArgument, "generator must be paper-synthetic or csv");
    if (generator == "csv" && data.empty()) fail(ErrorKind::InvalidArgument, "csv generator needs a data path");
    if (generator == "paper-synthetic" && dim < 1) fail(ErrorKind::InvalidArgument, "dim must be >= 1");
  }
  if (eff == ExperimentKind::CauchyCalibration) {
    if (dim < 1) fail(ErrorKind::InvalidArgument, "dim must be >= 1");
    if (checkpoints.empty()) fail(ErrorKind::InvalidArgument, "cauchy needs chain checkpoints");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      if (checkpoints[i] < 2) fail(ErrorKind::InvalidArgument, "checkpoints must be >= 2");
      if (i > 0 && checkpoints[i] <= checkpoints[i - 1])
        fail(ErrorKind::InvalidArgument, "checkpoints must be strictly increasing");
    }
  }
  const std::string want = default_model(eff);
  if (!model.empty() && model != want)
    fail(ErrorKind::InvalidArgument, std::string(to_string(eff)) + " runs the " + want + " model, not " + model);
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) fail(ErrorKind::ParseError, "config must be a JSON object");
  reject_unknown(j,
                 {"experiment", "scenario", "n_grid", "repetitions", "chain", "seed", "output", "model", "prior", "data",
                  "generator", "dim", "checkpoints", "target", "threads", "desk"},
                 "config");
  ExperimentConfig c;
  if (!j.contains("experiment")) fail(ErrorKind::ParseError, "config needs 'experiment'");
  c.kind = parse_kind(get<std::string>(j, "experiment", ""));
  c.timing_target = parse_kind(get<std::string>(j, "target", "logistic-synthetic"));
  const ExperimentKind eff = c.kind == ExperimentKind::Timing ? c.timing_target : c.kind;

  c.scenario = get<int>(j, "scenario", 1);
  c.n_grid = get<std::vector<std::size_t>>(j, "n_grid", {});
  c.repetitions = get<std::size_t>(j, "repetitions", 1);
  c.seed = get<std::uint64_t>(j, "seed", 0);
  c.output = get<std::string>(j, "output", "out");
  c.model = get<std::string>(j, "model", default_model(eff));
  c.prior = get<std::string>(j, "prior", default_prior(eff));
  c.data = get<std::string>(j, "data", "");
  c.generator = get<std::string>(j, "generator", "paper-synthetic");
  c.dim = get<std::size_t>(j, "dim", eff == ExperimentKind::CauchyCalibration ? 10 : 100);
  c.checkpoints = get<std::vector<std::size_t>>(j, "checkpoints", {1000, 5000, 10000, 20000, 30000, 40000, 50000});
  c.threads = get<std::size_t>(j, "threads", 0);

  if (eff == ExperimentKind::PoissonShrinkage) c.chain.burnin = 1000;
  if (eff == ExperimentKind::CauchyCalibration) c.chain.burnin = 5000;
  if (j.contains("chain")) {
    const json& ch = j.at("chain");
    if (!ch.is_object()) fail(ErrorKind::ParseError, "'chain' must be an object");
    reject_unknown(ch, {"length", "burnin", "thinning", "step_scale"}, "chain");
    c.chain.length = get<std::size_t>(ch, "length", c.chain.length);
    c.chain.burnin = get<std::size_t>(ch, "burnin", c.chain.burnin);
    c.chain.thinning = get<std::size_t>(ch, "thinning", c.chain.thinning);
    c.chain.step_scale = get<double>(ch, "step_scale", c.chain.step_scale);
  }
  c.chain.seed = c.seed;
  c.raw = j;
  c.validate();
  if (get<bool>(j, "desk", false)) apply_desk_preset(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = std::string(to_string(c.kind));
  if (c.kind == ExperimentKind::Timing) j["target"] = std::string(to_string(c.timing_target));
  j["scenario"] = c.scenario;
  j["n_grid"] = c.n_grid;
  j["repetitions"] = c.repetitions;
  j["chain"] = {{"length", c.chain.length},
                {"burnin", c.chain.burnin},
                {"thinning", c.chain.thinning},
                {"step_scale", c.chain.step_scale}};
  j["seed"] = c.seed;
  j["output"] = c.output.string();
  j["model"] = c.model;
  j["prior"] = c.prior;
  if (!c.data.empty()) j["data"] = c.data.string();
  j["generator"] = c.generator;
  j["dim"] = c.dim;
  j["checkpoints"] = c.checkpoints;
  j["threads"] = c.threads;
  j["desk"] = c.desk;
  return j;
}

void apply_desk_preset(ExperimentConfig& c) {
  const ExperimentKind eff = c.kind == ExperimentKind::Timing ? c.timing_target : c.kind;
  switch (eff) {
    case ExperimentKind::LogisticSynthetic:
    case ExperimentKind::Banknote:
      c.chain.length = 2000;
      c.chain.burnin = 2000;
      if (c.kind != ExperimentKind::Timing) c.repetitions = 20;
      break;
    case ExperimentKind::PoissonShrinkage:
      c.chain.length = 5000;
      c.chain.burnin = 1000;
      break;
    case ExperimentKind::CauchyCalibration:
    case ExperimentKind::Timing:
      break;
  }
  c.desk = true;
  c.validate();
}

}  // namespace matchprior::experiments

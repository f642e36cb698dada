#include "matchprior/experiments/experiments.hpp"

#include "matchprior/core/error.hpp"
#include "matchprior/estimators/estimators.hpp"
#include "matchprior/model/models.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace matchprior::experiments {

namespace {

struct Cell {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
};

struct Outcome {
  std::string label;
  std::string status = "ok";
  Vector estimate;
  Vector mc_se;
  double seconds = std::numeric_limits<double>::quiet_NaN();
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Runs fn, which fills the estimate (and optionally mc_se); library errors become the row status.
template <class F>
Outcome attempt(std::string label, F&& fn) {
  Outcome o;
  o.label = std::move(label);
  const auto t0 = Clock::now();
  try {
    fn(o);
    if (!all_finite(o.estimate)) {
      o.status = std::string(to_string(ErrorKind::NonFiniteLogDensity));
      o.estimate = Vector();
    }
  } catch (const Error& e) {
    o.status = std::string(to_string(e.kind()));
    o.estimate = Vector();
    o.mc_se = Vector();
  }
  o.seconds = seconds_since(t0);
  return o;
}

std::vector<GapRecord> to_records(const Cell& cell, const std::string& reference, std::vector<Outcome> outcomes) {
  const Outcome* ref = nullptr;
  for (const auto& o : outcomes)
    if (o.label == reference) ref = &o;
  if (!ref) fail(ErrorKind::InvalidArgument, "reference label '" + reference + "' missing from the cell");
  const bool ref_ok = ref->status == "ok";
  std::vector<GapRecord> out;
  for (auto& o : outcomes) {
    GapRecord r;
    r.n = cell.n;
    r.rep = cell.rep;
    r.label = o.label;
    r.reference = reference;
    r.status = o.status;
    r.estimate = o.estimate;
    r.mc_se = o.mc_se;
    r.seconds = o.seconds;
    if (o.status == "ok") {
      if (ref_ok) {
        r.gap = (o.estimate - ref->estimate).cwiseAbs();
        r.l2 = r.gap.norm();
      } else {
        r.status = "no-reference";
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Parses head(a,b,...) after stripping whitespace; "auto" maps to NaN.
std::vector<double> prior_args(const std::string& raw, const std::string& head) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.rfind(head + "(", 0) != 0 || s.back() != ')')
    fail(ErrorKind::ParseError, "expected a " + head + "(...) prior, got '" + raw + "'");
  const std::string inner = s.substr(head.size() + 1, s.size() - head.size() - 2);
  std::vector<double> args;
  std::size_t pos = 0;
  while (pos <= inner.size()) {
    const std::size_t comma = std::min(inner.find(',', pos), inner.size());
    const std::string tok = inner.substr(pos, comma - pos);
    if (tok == "auto") {
      args.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorKind::ParseError, "bad number '" + tok + "' in '" + raw + "'");
      }
    }
    pos = comma + 1;
  }
  return args;
}

std::size_t worker_env_cap() {
  const char* env = std::getenv("MATCHPRIOR_THREADS");
  if (!env || !*env) return 0;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) fail(ErrorKind::InvalidArgument, "MATCHPRIOR_THREADS must be a positive integer");
  return static_cast<std::size_t>(v);
}

/// Executes body over every (n, rep) cell on a worker pool; rows come back in cell order.
template <class Body>
void run_cells(const ExperimentConfig& c, RunResult& r, Body&& body) {
  std::vector<Cell> cells;
  for (std::size_t n : c.n_grid)
    for (std::size_t rep = 0; rep < c.repetitions; ++rep) cells.push_back({n, rep, derive_seed(c.seed, {n, rep})});
  for (const auto& cell : cells) r.seeds.push_back({cell.n, cell.rep, cell.seed});

  std::vector<std::vector<GapRecord>> rows(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        rows[i] = body(cells[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min(worker_count(c.threads), cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (auto& cell_rows : rows)
    for (auto& row : cell_rows) r.records.push_back(std::move(row));
}

// ---------------------------------------------------------------- logistic

std::vector<GapRecord> logistic_cell(const Cell& cell, const Dataset& data, const ExperimentConfig& c) {
  const std::size_t k = data.covariate_dim();
  auto model = std::make_shared<LogisticGlm>(LogisticGlm::from_dataset(data));
  const Prior prior = parse_prior(c.prior, model);
  const auto [mean, var] = normal_hyper(c.prior);
  const Vector start = Vector::Zero(static_cast<Index>(k));

  std::vector<Outcome> outs;
  outs.push_back(attempt("ridge-map", [&](Outcome& o) { o.estimate = map_estimate(*model, data, prior, start).point; }));
  const Vector ridge = outs.back().status == "ok" ? outs.back().estimate : start;

  outs.push_back(attempt("matching-map", [&](Outcome& o) {
    o.estimate = map_estimate(*model, data, eflat_map_partner(prior, model), ridge).point;
  }));

  Vector init = ridge;
  try {
    init = mle(*model, data, ridge).point;
  } catch (const Error&) {
  }
  outs.push_back(attempt("pm-gibbs", [&](Outcome& o) {
    ChainConfig cfg = c.chain;
    cfg.seed = derive_seed(cell.seed, {1});
    const auto chain = polya_gamma_gibbs(data.covariates(), k, data.responses(),
                                         GaussianPriorSpec::isotropic(static_cast<Index>(k), mean, var), cfg, init);
    o.estimate = chain.posterior_mean;
    o.mc_se = chain.mc_se;
  }));
  return to_records(cell, "pm-gibbs", std::move(outs));
}

Dataset logistic_synthetic_data(int scenario, std::size_t n, Rng& rng) {
  std::vector<double> x(2 * n), y(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double xi = static_cast<double>(i) / static_cast<double>(n);
    x[2 * (i - 1)] = 1.0;
    x[2 * (i - 1) + 1] = xi;
    if (scenario == 1) y[i - 1] = rng.bernoulli(1.0 / (1.0 + std::exp(-xi))) ? 1.0 : 0.0;
    else y[i - 1] = 2 * i > n ? 1.0 : 0.0;
  }
  return Dataset(1, std::move(y), 2, std::move(x));
}

// --------------------------------------------------------------- shrinkage

Dataset shrinkage_synthetic_data(std::size_t d, std::size_t n, Rng& rng) {
  std::vector<double> y(n * d);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) y[t * d + j] = static_cast<double>(rng.poisson(j % 2 == 0 ? 0.001 : 2.0));
  return Dataset(d, std::move(y), 0, {});
}

std::vector<GapRecord> shrinkage_cell(const Cell& cell, const Dataset& data, const ExperimentConfig& c) {
  const std::size_t d = data.response_dim();
  const Index di = static_cast<Index>(d);
  const double n = static_cast<double>(data.size());
  const KomakiHyper ka = komaki_hyper(c.prior, d);
  const Vector beta = Vector::Constant(di, ka.beta);
  const auto s = data.response_sums();
  const Vector sums = Eigen::Map<const Vector>(s.data(), di);

  auto model = std::make_shared<PoissonSequence>(di);
  std::optional<Box> bounds;
  if (ka.floor > 0) bounds = Box::uniform(di, Interval{ka.floor, std::numeric_limits<double>::infinity()});
  const Vector chain_init = (sums / n).array() + 1.0;

  std::vector<Outcome> outs;
  outs.push_back(attempt("komaki-map", [&](Outcome& o) {
    const Prior prior = komaki_prior(beta, ka.alpha, ka.floor);
    const Vector init = (sums.array() + 0.5) / n + ka.floor;
    o.estimate = map_estimate(*model, data, prior, init, {}, bounds).point;
  }));
  outs.push_back(attempt("komaki-pm", [&](Outcome& o) {
    ChainConfig cfg = c.chain;
    cfg.seed = derive_seed(cell.seed, {1});
    const auto chain = komaki_gibbs(sums, data.size(), beta, ka.alpha, cfg, ka.floor, chain_init);
    o.estimate = chain.posterior_mean;
    o.mc_se = chain.mc_se;
  }));
  // komaki / prod(lambda) is the komaki family with every beta lowered by one.
  outs.push_back(attempt("matching-pm", [&](Outcome& o) {
    ChainConfig cfg = c.chain;
    cfg.seed = derive_seed(cell.seed, {2});
    const auto chain = komaki_gibbs(sums, data.size(), (beta.array() - 1.0).matrix(), ka.alpha, cfg, ka.floor,
                                    chain_init);
    o.estimate = chain.posterior_mean;
    o.mc_se = chain.mc_se;
  }));
  return to_records(cell, "komaki-map", std::move(outs));
}

// ------------------------------------------------------------------ cauchy

std::string checkpoint_label(std::size_t m) { return "pm-rwmh-" + std::to_string(m); }

std::vector<GapRecord> cauchy_cell(const Cell& cell, const ExperimentConfig& c) {
  const Index d = static_cast<Index>(c.dim);
  auto model = std::make_shared<MultivariateCauchy>(d);
  Rng rng(derive_seed(cell.seed, {0}));
  std::vector<Observation> obs;
  for (std::size_t t = 0; t < cell.n; ++t) obs.push_back(model->sample(rng, Vector::Zero(d)));
  const Dataset data(obs);
  const Prior prior = parse_prior(c.prior, model);

  std::vector<Outcome> outs;
  outs.push_back(attempt("map", [&](Outcome& o) { o.estimate = map_estimate(*model, data, prior, model->default_init(data)).point; }));
  const Outcome map_out = outs.back();
  outs.push_back(attempt("calibrated", [&](Outcome& o) {
    if (map_out.status != "ok") fail(ErrorKind::NotConverged, "no MAP to calibrate");
    CalibrationOptions opts;
    o.estimate = calibrate_pm_from_map(*model, data, map_out.estimate, opts).point;
  }));

  const auto t0 = Clock::now();
  ChainOutput chain;
  std::string chain_status = "ok";
  try {
    ChainConfig cfg = c.chain;
    cfg.length = c.checkpoints.back();
    cfg.seed = derive_seed(cell.seed, {1});
    const Vector init = map_out.status == "ok" ? map_out.estimate : model->default_init(data);
    chain = rwmh(*model, data, prior, cfg, Proposal{ProposalKind::Cauchy, std::nullopt}, init);
  } catch (const Error& e) {
    chain_status = std::string(to_string(e.kind()));
  }
  const double chain_seconds = seconds_since(t0);
  for (std::size_t m : c.checkpoints) {
    Outcome o;
    o.label = checkpoint_label(m);
    o.status = chain_status;
    if (chain_status == "ok") {
      ChainOutput prefix;
      prefix.samples = chain.samples.topRows(std::min<Index>(static_cast<Index>(m / c.chain.thinning), chain.samples.rows()));
      summarize(prefix);
      o.estimate = prefix.posterior_mean;
      o.mc_se = prefix.mc_se;
    }
    if (m == c.checkpoints.back()) o.seconds = chain_seconds;
    outs.push_back(std::move(o));
  }
  return to_records(cell, checkpoint_label(c.checkpoints.back()), std::move(outs));
}

}  // namespace

std::pair<double, double> normal_hyper(const std::string& spec) {
  const auto a = prior_args(spec, "normal");
  if (a.size() != 2 || !std::isfinite(a[0]) || !(a[1] > 0))
    fail(ErrorKind::InvalidHyperparameter, "normal prior needs (mean, variance > 0)");
  return {a[0], a[1]};
}

KomakiHyper komaki_hyper(const std::string& spec, std::size_t d) {
  const auto a = prior_args(spec, "komaki");
  if (a.empty() || a.size() > 3) fail(ErrorKind::InvalidHyperparameter, "komaki prior takes (beta[,alpha[,floor]])");
  KomakiHyper k{a[0], std::numeric_limits<double>::quiet_NaN(), 0.0};
  if (a.size() > 1) k.alpha = a[1];
  if (a.size() > 2) k.floor = a[2];
  if (std::isnan(k.alpha)) k.alpha = static_cast<double>(d) * k.beta - 1.0;
  return k;
}

std::size_t worker_count(std::size_t requested) {
  std::size_t w = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const std::size_t cap = worker_env_cap(); cap > 0) w = std::min(w, cap);
  return std::max<std::size_t>(w, 1);
}

RunResult run_logistic_synthetic(const ExperimentConfig& c) {
  c.validate();
  RunResult r;
  r.experiment = "logistic-synthetic";
  r.timing_labels = {"pm-gibbs", "matching-map"};
  r.notes["init"] = "pg-gibbs starts at the MLE, or the ridge MAP when the MLE fails";
  r.notes["scenario"] = std::to_string(c.scenario);
  run_cells(c, r, [&](const Cell& cell) {
    Rng rng(derive_seed(cell.seed, {0}));
    return logistic_cell(cell, logistic_synthetic_data(c.scenario, cell.n, rng), c);
  });
  return r;
}

RunResult run_banknote(const ExperimentConfig& c) {
  c.validate();
  const Dataset all = load_banknote(c.data);
  if (c.n_grid.back() > all.size())
    fail(ErrorKind::InvalidArgument, "n grid exceeds the " + std::to_string(all.size()) + " rows in " + c.data.string());
  RunResult r;
  r.experiment = "banknote";
  r.timing_labels = {"pm-gibbs", "matching-map"};
  r.notes["init"] = "pg-gibbs starts at the MLE, or the ridge MAP when the MLE fails";
  r.notes["subsample"] = "without replacement per (n, rep), sorted row indices";
  run_cells(c, r, [&](const Cell& cell) {
    Rng rng(derive_seed(cell.seed, {0}));
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < cell.n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
    idx.resize(cell.n);
    std::sort(idx.begin(), idx.end());
    return logistic_cell(cell, all.select(idx), c);
  });
  return r;
}

RunResult run_poisson_shrinkage(const ExperimentConfig& c) {
  c.validate();
  std::optional<Dataset> periods;
  if (c.generator == "csv") {
    periods = load_csv(c.data);
    if (c.n_grid.back() > periods->size())
      fail(ErrorKind::InvalidArgument,
           "n grid exceeds the " + std::to_string(periods->size()) + " periods in " + c.data.string());
  }
  RunResult r;
  r.experiment = "poisson-shrinkage";
  r.timing_labels = {"komaki-map", "matching-pm"};
  r.notes["init"] = "komaki-gibbs chains start at the per-coordinate mean count plus one";
  r.notes["generator"] = c.generator;
  run_cells(c, r, [&](const Cell& cell) {
    if (periods) return shrinkage_cell(cell, periods->slice(0, cell.n), c);
    Rng rng(derive_seed(cell.seed, {0}));
    return shrinkage_cell(cell, shrinkage_synthetic_data(c.dim, cell.n, rng), c);
  });
  return r;
}

RunResult run_cauchy_calibration(const ExperimentConfig& c) {
  c.validate();
  RunResult r;
  r.experiment = "cauchy-calibration";
  r.timing_labels = {checkpoint_label(c.checkpoints.back()), "calibrated"};
  r.notes["init"] = "rwmh starts at the MAP";
  r.notes["truth"] = "data drawn at location 0";
  run_cells(c, r, [&](const Cell& cell) { return cauchy_cell(cell, c); });
  return r;
}

RunResult run_timing(const ExperimentConfig& c) {
  c.validate();
  ExperimentConfig target = c;
  target.kind = c.timing_target;
  RunResult r = run_experiment(target);
  r.notes["timed"] = r.experiment;
  r.experiment = "timing";
  return r;
}

RunResult run_experiment(const ExperimentConfig& c) {
  switch (c.kind) {
    case ExperimentKind::LogisticSynthetic:
      return run_logistic_synthetic(c);
    case ExperimentKind::Banknote:
      return run_banknote(c);
    case ExperimentKind::PoissonShrinkage:
      return run_poisson_shrinkage(c);
    case ExperimentKind::CauchyCalibration:
      return run_cauchy_calibration(c);
    case ExperimentKind::Timing:
      return run_timing(c);
  }
  fail(ErrorKind::InvalidArgument, "unknown experiment");
}

}  // namespace matchprior::experiments

#include "matchprior/core/error.hpp"
#include "matchprior/estimators/estimators.hpp"
#include "matchprior/experiments/experiments.hpp"
#include "matchprior/geometry/geometry.hpp"
#include "matchprior/mcmc/mcmc.hpp"
#include "matchprior/model/models.hpp"
#include "matchprior/oracle/oracle.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

using namespace matchprior;
using nlohmann::json;

namespace {

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vector(m.row(i).transpose())));
  return rows;
}

json to_json(const Tensor3& t) {
  json out = json::array();
  for (Index a = 0; a < t.dim(); ++a) {
    json slab = json::array();
    for (Index b = 0; b < t.dim(); ++b) {
      json row = json::array();
      for (Index c = 0; c < t.dim(); ++c) row.push_back(t(a, b, c));
      slab.push_back(row);
    }
    out.push_back(slab);
  }
  return out;
}

json to_json(const EstimateResult& r) {
  json j;
  j["point"] = to_json(r.point);
  j["method"] = std::string(to_string(r.method));
  if (r.optimizer) {
    j["optimizer"] = {{"iterations", r.optimizer->iterations},
                      {"final_grad_norm", r.optimizer->final_grad_norm},
                      {"converged", r.optimizer->converged},
                      {"active", r.optimizer->active}};
  }
  if (r.sampler) {
    j["sampler"] = {{"ess", r.sampler->ess},
                    {"mc_se", to_json(r.sampler->mc_se)},
                    {"seed", r.sampler->seed},
                    {"chain_length", r.sampler->chain_length},
                    {"burnin", r.sampler->burnin},
                    {"acceptance_rate", r.sampler->acceptance_rate}};
  }
  j["metadata"] = r.metadata;
  return j;
}

Vector parse_vector(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      fail(ErrorKind::ParseError, "bad number '" + tok + "' in '" + s + "'");
    }
  }
  return Eigen::Map<Vector>(v.data(), static_cast<Index>(v.size()));
}

struct ModelArgs {
  std::string model;
  std::string data;
  std::string format = "csv";
  std::size_t dim = 1;
  std::uint64_t seed = 20240601;
  double known_mean = 0.0;
  double variance = 1.0;

  void add(CLI::App* app) {
    app->add_option("--model", model, "gaussian-precision, gaussian-location, poisson, poisson-log, poisson-sequence, "
                                      "logistic or cauchy")
        ->required();
    app->add_option("--data", data, "CSV with header y or y1..yd and optional x1..xk");
    app->add_option("--format", format, "csv or banknote")->check(CLI::IsMember({"csv", "banknote"}));
    app->add_option("--dim", dim, "dimension when no data is given");
    app->add_option("--seed", seed, "seed for Monte Carlo work");
    app->add_option("--known-mean", known_mean, "gaussian-precision mean");
    app->add_option("--variance", variance, "gaussian-location variance");
  }

  Dataset load() const {
    if (data.empty()) {
      if (model == "logistic") fail(ErrorKind::InvalidArgument, "the logistic model needs --data");
      return Dataset(dim, std::vector<double>(dim, 1.0), 0, {});
    }
    return format == "banknote" ? load_banknote(data) : load_csv(data);
  }

  ModelPtr build(const Dataset& d) const {
    ModelOptions o;
    o.known_mean = known_mean;
    o.variance = variance;
    o.fisher_seed = seed;
    return make_model(model, d, o);
  }
};

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matchprior: matching prior pairs, estimators and experiments"};
  app.require_subcommand(1);

  // geometry dump
  auto* geometry = app.add_subcommand("geometry", "information geometry at a point");
  geometry->require_subcommand(1);
  auto* dump = geometry->add_subcommand("dump", "emit the geometry report as JSON");
  ModelArgs geo_model;
  geo_model.add(dump);
  std::string geo_at, geo_method = "analytic";
  std::size_t geo_draws = 200000;
  dump->add_option("--at", geo_at, "comma-separated point")->required();
  dump->add_option("--method", geo_method, "analytic or mc")->check(CLI::IsMember({"analytic", "mc"}));
  dump->add_option("--draws", geo_draws, "Monte Carlo draws");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "point estimates");
  ModelArgs est_model;
  est_model.add(estimate);
  std::string est_prior = "uniform", est_method = "map", est_init;
  std::optional<double> est_bound;
  double est_tol = 1e-8;
  estimate->add_option("--prior", est_prior, "prior from the catalog");
  estimate->add_option("--method", est_method, "mle, map, calibrate or laplace")
      ->check(CLI::IsMember({"mle", "map", "calibrate", "laplace"}));
  estimate->add_option("--bounds", est_bound, "common lower bound for every coordinate");
  estimate->add_option("--tol", est_tol, "optimizer tolerance");
  estimate->add_option("--init", est_init, "comma-separated starting point");

  // sample
  auto* sample = app.add_subcommand("sample", "posterior sampling");
  ModelArgs smp_model;
  smp_model.add(sample);
  std::string smp_sampler = "rwmh", smp_prior = "uniform", smp_out, smp_proposal = "gaussian", smp_init;
  ChainConfig chain;
  std::optional<double> smp_step;
  double smp_floor = 0.0;
  sample->add_option("--sampler", smp_sampler, "rwmh, pg-gibbs or komaki-gibbs")
      ->check(CLI::IsMember({"rwmh", "pg-gibbs", "komaki-gibbs"}));
  sample->add_option("--prior", smp_prior, "prior from the catalog; normal(m,v) for pg-gibbs, komaki(...) for "
                                           "komaki-gibbs");
  sample->add_option("--chain-length", chain.length, "kept draws after burn-in");
  sample->add_option("--burnin", chain.burnin, "burn-in iterations");
  sample->add_option("--thinning", chain.thinning, "keep every k-th draw");
  sample->add_option("--step", smp_step, "rwmh proposal step");
  sample->add_option("--proposal", smp_proposal, "gaussian or cauchy")->check(CLI::IsMember({"gaussian", "cauchy"}));
  sample->add_option("--floor", smp_floor, "komaki-gibbs lower bound on every rate");
  sample->add_option("--init", smp_init, "comma-separated starting point");
  sample->add_option("--out", smp_out, "samples CSV (stdout when omitted)");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "posterior mean by quadrature or closed form");
  ModelArgs orc_model;
  orc_model.add(oracle);
  std::string orc_prior = "uniform", orc_conjugate;
  double orc_tol = 1e-10, orc_a = 1, orc_b = 1;
  oracle->add_option("--prior", orc_prior, "prior from the catalog");
  oracle->add_option("--tol", orc_tol, "absolute tolerance");
  oracle->add_option("--conjugate", orc_conjugate, "poisson-gamma or gaussianprecision-gamma: closed form instead");
  oracle->add_option("--a", orc_a, "conjugate shape");
  oracle->add_option("--b", orc_b, "conjugate rate");

  // run
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  std::string run_config, run_output;
  bool run_desk = false;
  run->add_option("config", run_config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_flag("--desk", run_desk, "scaled-down chains and repetitions");
  run->add_option("--output", run_output, "override the output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump->parsed()) {
      const Dataset d = geo_model.load();
      const ModelPtr m = geo_model.build(d);
      GeometryOptions o;
      o.method = geo_method == "mc" ? GeometryMethod::MonteCarlo : GeometryMethod::Analytic;
      o.seed = geo_model.seed;
      o.draws = geo_draws;
      const GeometryReport r = geometry_at(*m, parse_vector(geo_at), o);
      json j{{"g", to_json(r.g)},
             {"g_inv", to_json(r.g_inv)},
             {"gamma_e", to_json(r.gamma_e)},
             {"gamma_m", to_json(r.gamma_m)},
             {"T", to_json(r.T)},
             {"T_a", to_json(r.T_a)},
             {"at", to_json(r.at)},
             {"method", std::string(to_string(r.method))},
             {"seed", r.seed}};
      if (r.method == GeometryMethod::MonteCarlo) j["draws"] = r.draws;
      emit(j);
    } else if (estimate->parsed()) {
      const Dataset d = est_model.load();
      const ModelPtr m = est_model.build(d);
      const Prior prior = parse_prior(est_prior, m);
      const Vector init = est_init.empty() ? m->default_init(d) : parse_vector(est_init);
      OptimizerOptions opts;
      opts.tol = est_tol;
      std::optional<Box> bounds;
      if (est_bound)
        bounds = Box::uniform(m->dim(), Interval{*est_bound, std::numeric_limits<double>::infinity()});
      EstimateResult r;
      if (est_method == "mle") {
        r = mle(*m, d, init, opts);
      } else {
        r = map_estimate(*m, d, prior, init, opts, bounds);
        if (est_method == "calibrate") {
          CalibrationOptions c;
          c.bounds = bounds;
          c.prior = &prior;
          r = calibrate_pm_from_map(*m, d, r.point, c);
        } else if (est_method == "laplace") {
          EstimateResult l;
          l.point = laplace_posterior_expectation(*m, d, prior, identity_statistic(m->dim()), r.point);
          l.method = EstimateMethod::Laplace;
          l.metadata["prior"] = prior.label;
          l.metadata["expanded_at"] = "MAP";
          r = l;
        }
      }
      emit(to_json(r));
    } else if (sample->parsed()) {
      const Dataset d = smp_model.load();
      const ModelPtr m = smp_model.build(d);
      chain.seed = smp_model.seed;
      const Vector init = smp_init.empty() ? m->default_init(d) : parse_vector(smp_init);
      ChainOutput out;
      if (smp_sampler == "rwmh") {
        const Prior prior = parse_prior(smp_prior, m);
        Proposal p{smp_proposal == "cauchy" ? ProposalKind::Cauchy : ProposalKind::Gaussian, smp_step};
        out = rwmh(*m, d, prior, chain, p, init);
      } else if (smp_sampler == "pg-gibbs") {
        if (smp_model.model != "logistic") fail(ErrorKind::InvalidArgument, "pg-gibbs needs the logistic model");
        const auto [mean, var] = experiments::normal_hyper(smp_prior);
        out = polya_gamma_gibbs(d.covariates(), d.covariate_dim(), d.responses(),
                                GaussianPriorSpec::isotropic(m->dim(), mean, var), chain, init);
      } else {
        if (smp_model.model != "poisson-sequence")
          fail(ErrorKind::InvalidArgument, "komaki-gibbs needs the poisson-sequence model");
        const auto k = experiments::komaki_hyper(smp_prior, d.response_dim());
        const auto s = d.response_sums();
        const Vector sums = Eigen::Map<const Vector>(s.data(), static_cast<Index>(s.size()));
        std::optional<Vector> start;
        if (!smp_init.empty()) start = init;
        out = komaki_gibbs(sums, d.size(), Vector::Constant(m->dim(), k.beta), k.alpha, chain,
                           std::max(k.floor, smp_floor), start);
      }
      if (smp_out.empty()) {
        std::cout << samples_csv(out);
      } else {
        std::ofstream f(smp_out);
        if (!f) fail(ErrorKind::IoError, "cannot write " + smp_out);
        f << samples_csv(out);
        emit({{"posterior_mean", to_json(out.posterior_mean)},
              {"mc_se", to_json(out.mc_se)},
              {"ess", to_json(out.ess)},
              {"acceptance_rate", out.acceptance_rate},
              {"seed", chain.seed}});
      }
    } else if (oracle->parsed()) {
      const Dataset d = orc_model.load();
      if (!orc_conjugate.empty()) {
        const auto fam = parse_conjugate_family(orc_conjugate);
        if (!fam) fail(ErrorKind::InvalidArgument, "unknown conjugate family '" + orc_conjugate + "'");
        emit({{"value", {conjugate_pm(*fam, orc_a, orc_b, d, orc_model.known_mean)}}, {"method", "closed-form"}});
      } else {
        const ModelPtr m = orc_model.build(d);
        const Prior prior = parse_prior(orc_prior, m);
        const QuadEstimate q = quad_posterior_mean(*m, d, prior, QuadratureSpec{orc_tol});
        emit({{"value", to_json(q.value)}, {"error", to_json(q.error)}, {"method", "quadrature"}});
      }
    } else if (run->parsed()) {
      auto cfg = experiments::load_config(run_config);
      if (run_desk) experiments::apply_desk_preset(cfg);
      if (!run_output.empty()) cfg.output = run_output;
      const auto result = experiments::run_experiment(cfg);
      experiments::write_outputs(cfg, result);
      std::size_t failed = 0;
      for (const auto& r : result.records) failed += r.status != "ok";
      std::cerr << result.records.size() << " records written to " << cfg.output.string() << " (" << failed
                << " not ok)\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

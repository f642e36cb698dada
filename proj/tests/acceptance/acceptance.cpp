#include "matchprior/core/error.hpp"
#include "matchprior/estimators/estimators.hpp"
#include "matchprior/experiments/experiments.hpp"
#include "matchprior/geometry/geometry.hpp"
#include "matchprior/mcmc/mcmc.hpp"
#include "matchprior/model/models.hpp"
#include "matchprior/oracle/oracle.hpp"
#include "matchprior/priors/prior.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

using namespace matchprior;
namespace fs = std::filesystem;
namespace ex = matchprior::experiments;

namespace {

const fs::path kSource = MATCHPRIOR_SOURCE_DIR;
const std::string kCli = MATCHPRIOR_CLI;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_s;  // 0: no runtime bound
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

Vector v1(double x) { return Vector::Constant(1, x); }

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Dataset sample_dataset(const Model& m, const Vector& theta, std::size_t n, Rng& rng) {
  std::vector<Observation> obs;
  for (std::size_t i = 0; i < n; ++i) obs.push_back(m.sample(rng, theta));
  return Dataset(obs);
}

Dataset poisson_with_sum(std::size_t n, std::size_t s) {
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < s; ++i) y[i % n] += 1.0;
  return Dataset(1, y, 0, {});
}

std::vector<double> random_design(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<double> x(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) x[i * k + j] = j == 0 ? 1.0 : rng.normal();
  return x;
}

Dataset logistic_data(Rng& rng, const std::vector<double>& x, std::size_t k, const Vector& beta) {
  const std::size_t n = x.size() / k;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t j = 0; j < k; ++j) eta += x[i * k + j] * beta(static_cast<Index>(j));
    y[i] = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0;
  }
  return Dataset(1, y, k, x);
}

Vector interior_point(Rng& rng, const Model& m) {
  const Box b = m.support();
  Vector v(m.dim());
  for (Index i = 0; i < m.dim(); ++i)
    v(i) = std::isfinite(b[i].lo) ? b[i].lo + std::exp(uniform_in(rng, -1.0, 1.5)) : uniform_in(rng, -1.5, 1.5);
  return v;
}

double sum_col(const Dataset& d, bool square) {
  double s = 0;
  for (std::size_t i = 0; i < d.size(); ++i) s += square ? d[i].response[0] * d[i].response[0] : d[i].response[0];
  return s;
}

double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = std::log(xs[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

const std::vector<double> kGrid{16, 32, 64, 128, 256, 512, 1024};

ChainConfig chain(std::size_t m, std::size_t burn, std::uint64_t seed) {
  ChainConfig c;
  c.length = m;
  c.burnin = burn;
  c.seed = seed;
  return c;
}

// ------------------------------------------------------------------ 1, 2

Verdict exact_eflat() {
  Rng rng(101);
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  double worst = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const double a = uniform_in(rng, 0.5, 5), b = uniform_in(rng, 0.2, 5);
    const std::size_t n = 1 + rng.below(60);
    const Dataset d = sample_dataset(*gp, v1(uniform_in(rng, 0.2, 5)), n, rng);
    const double exact = (a + n / 2.0) / (b + sum_col(d, true) / 2.0);
    const Prior map = eflat_map_partner(gamma_prior(1, a, b), gp);
    const double est = map_estimate(*gp, d, map, gp->default_init(d)).point(0);
    const double pm = conjugate_pm(ConjugateFamily::GaussianPrecisionGamma, a, b, d);
    worst = std::max({worst, std::abs(est - exact) / std::max(1.0, exact), std::abs(pm - exact) / std::max(1.0, exact)});
  }
  return {worst <= 1e-10, "max scaled error " + fmt("%.2e", worst) + " over 20 tuples"};
}

Verdict exact_mflat() {
  Rng rng(102);
  auto pr = std::make_shared<PoissonRate>();
  double worst = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const double a = uniform_in(rng, 0.5, 5), b = uniform_in(rng, 0.2, 5);
    const std::size_t n = 1 + rng.below(60);
    const Dataset d = sample_dataset(*pr, v1(uniform_in(rng, 0.2, 5)), n, rng);
    const double exact = (a + sum_col(d, false)) / (b + n);
    const Prior map = mflat_map_partner(gamma_prior(1, a, b), pr);
    const double est = map_estimate(*pr, d, map, pr->default_init(d)).point(0);
    const double pm = conjugate_pm(ConjugateFamily::PoissonGamma, a, b, d);
    worst = std::max({worst, std::abs(est - exact) / std::max(1.0, exact), std::abs(pm - exact) / std::max(1.0, exact)});
  }
  return {worst <= 1e-10, "max scaled error " + fmt("%.2e", worst) + " over 20 tuples"};
}

// --------------------------------------------------------------------- 3

Verdict residual_zero() {
  Rng rng(103);
  auto lg = std::make_shared<LogisticGlm>(2, random_design(rng, 30, 2));
  struct Case {
    ModelPtr model;
    Prior pm;
    bool eflat;
  };
  const std::vector<Case> cases{{std::make_shared<GaussianPrecision>(0.0), gamma_prior(1, 2.0, 1.5), true},
                                {std::make_shared<PoissonRate>(), gamma_prior(1, 1.5, 0.5), false},
                                {std::make_shared<PoissonSequence>(5), gamma_prior(5, 2.0, 1.0), false},
                                {lg, normal_prior(2, 0.0, 1.0), true}};
  double worst = 0;
  for (const auto& c : cases) {
    const Prior map = c.eflat ? eflat_map_partner(c.pm, c.model) : mflat_map_partner(c.pm, c.model);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector th = interior_point(rng, *c.model);
      worst = std::max(worst, matching_residual(c.pm, map, *c.model, th).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-8, "max |residual| " + fmt("%.2e", worst) + " over 4 models x 50 points"};
}

// --------------------------------------------------------------------- 4

Tensor3 fd_fisher(const Model& m, const Vector& th) {
  const Index d = m.dim();
  Tensor3 out(d);
  for (Index a = 0; a < d; ++a) {
    const double h = 1e-5 * std::max(1.0, std::abs(th(a)));
    Vector up = th, dn = th;
    up(a) += h;
    dn(a) -= h;
    const Matrix diff = (m.fisher(up) - m.fisher(dn)) / (2.0 * h);
    for (Index b = 0; b < d; ++b)
      for (Index c = 0; c < d; ++c) out(a, b, c) = diff(b, c);
  }
  return out;
}

Verdict geometry_identities() {
  Rng rng(104);
  const std::vector<ModelPtr> models{std::make_shared<GaussianPrecision>(0.0), std::make_shared<PoissonRate>(),
                                     std::make_shared<PoissonLogRate>(),       std::make_shared<PoissonSequence>(3),
                                     std::make_shared<LogisticGlm>(2, random_design(rng, 25, 2)),
                                     std::make_shared<LogisticGlm>(3, random_design(rng, 25, 3))};
  double duality = 0, skew = 0, jeff = 0, econn = 0;
  for (const auto& m : models) {
    for (int rep = 0; rep < 10; ++rep) {
      const Vector th = interior_point(rng, *m);
      const auto r = geometry_at(*m, th);
      const Tensor3 dg = fd_fisher(*m, th);
      const double scale = std::max(1.0, dg.max_abs());
      const Index d = m->dim();
      for (double alpha : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
        const Tensor3 ga = alpha_connection(r, alpha), gb = alpha_connection(r, -alpha);
        for (Index a = 0; a < d; ++a)
          for (Index b = 0; b < d; ++b)
            for (Index c = 0; c < d; ++c)
              duality = std::max(duality, std::abs(dg(a, b, c) - ga(a, b, c) - gb(a, c, b)) / scale);
      }
      const auto rebuilt = connections_from_derivatives(*m, th);
      if (!rebuilt) return {false, m->name() + ": no independent connection path"};
      skew = std::max(skew, (rebuilt->gamma_m - rebuilt->gamma_e).max_abs_diff(r.T) / std::max(1.0, r.T.max_abs()));
      jeff = std::max(jeff, (alpha_parallel_log_grad(r, 0.0) - jeffreys_log_grad(*m, th)).cwiseAbs().maxCoeff());
      if (m->family() == Family::ExpFamilyNatural || m->family() == Family::GlmCanonical)
        econn = std::max(econn, r.gamma_e.max_abs());
    }
  }
  const bool ok = duality < 1e-6 && skew < 1e-8 && jeff < 1e-8 && econn < 1e-8;
  return {ok, "duality " + fmt("%.1e", duality) + ", T vs m-e " + fmt("%.1e", skew) + ", alpha=0 vs Jeffreys " +
                  fmt("%.1e", jeff) + ", natural e-connection " + fmt("%.1e", econn)};
}

// --------------------------------------------------------------------- 5

Verdict calibration_rate() {
  std::vector<double> cal, raw;
  for (double n : kGrid) {
    double ec = 0, er = 0;
    for (int seed = 0; seed < 10; ++seed) {
      Rng rng(derive_seed(105, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(seed)}));
      PoissonRate pr;
      const Dataset d = sample_dataset(pr, v1(2.0), static_cast<std::size_t>(n), rng);
      const double s = sum_col(d, false);
      const double exact = (1 + s) / (1 + n);
      const double map = map_estimate(pr, d, gamma_prior(1, 1.0, 1.0), v1(std::max(s, 0.5) / n)).point(0);
      const double calib = calibrate_pm_from_map(pr, d, v1(map)).point(0);
      ec += std::abs(calib - exact);
      er += std::abs(map - exact);
    }
    cal.push_back(ec / 10);
    raw.push_back(er / 10);
  }
  const double sc = loglog_slope(kGrid, cal), sr = loglog_slope(kGrid, raw);
  return {sc <= -1.5 && sr >= -1.2 && sr <= -0.8,
          "calibrated slope " + fmt("%.3f", sc) + ", raw MAP slope " + fmt("%.3f", sr)};
}

// --------------------------------------------------------------------- 6

Verdict expansion_rates() {
  auto pr = std::make_shared<PoissonRate>();
  GaussianPrecision gp;
  const Prior g = gamma_prior(1, 3.0, 2.0);
  std::vector<double> map_err, pm_err, pm_err_gp;
  Rng rng(106);
  for (double n : kGrid) {
    const std::size_t ni = static_cast<std::size_t>(n);
    const Dataset d = poisson_with_sum(ni, static_cast<std::size_t>(1.3 * n));
    const double s = sum_col(d, false);
    const Vector m = v1(s / n);
    const double exact_map = (3 + s - 1) / (2 + n);
    map_err.push_back(std::abs(exact_map - map_expansion(*pr, g, m, ni)(0)));
    pm_err.push_back(std::abs((3 + s) / (2 + n) - posterior_mean_expansion(*pr, g, m, ni)(0)));
    const Dataset gd = sample_dataset(gp, v1(0.8), ni, rng);
    const double q = quad_posterior_mean(gp, gd, g).value(0);
    pm_err_gp.push_back(std::abs(q - posterior_mean_expansion(gp, g, v1(n / sum_col(gd, true)), ni)(0)));
  }
  const double a = loglog_slope(kGrid, map_err), b = loglog_slope(kGrid, pm_err), c = loglog_slope(kGrid, pm_err_gp);
  return {a <= -1.3 && b <= -1.3 && c <= -1.3, "MAP expansion " + fmt("%.3f", a) + ", PM expansion (Poisson) " +
                                                   fmt("%.3f", b) + ", PM expansion (precision, quadrature) " +
                                                   fmt("%.3f", c)};
}

// ------------------------------------------------------------- 7, 8, 9

std::map<std::pair<std::size_t, std::string>, double> mean_l2(const ex::RunResult& r) {
  std::map<std::pair<std::size_t, std::string>, std::pair<double, int>> acc;
  for (const auto& g : r.records)
    if (g.status == "ok") {
      auto& [s, k] = acc[{g.n, g.label}];
      s += g.l2;
      ++k;
    }
  std::map<std::pair<std::size_t, std::string>, double> out;
  for (const auto& [key, v] : acc) out[key] = v.first / v.second;
  return out;
}

Verdict logistic_trend() {
  auto c = ex::load_config(kSource / "configs" / "logistic_scenario1.json");
  ex::apply_desk_preset(c);
  const auto r = ex::run_experiment(c);
  const auto m = mean_l2(r);
  bool ok = c.repetitions == 20 && c.chain.length == 2000 && c.chain.burnin == 2000;
  std::ostringstream os;
  for (std::size_t n : c.n_grid) {
    const double a = m.count({n, "matching-map"}) ? m.at({n, "matching-map"}) : NAN;
    const double b = m.count({n, "ridge-map"}) ? m.at({n, "ridge-map"}) : NAN;
    if (n >= 64 && !(a < b)) ok = false;
    os << " n=" << n << ":" << fmt("%.4f", a) << "/" << fmt("%.4f", b);
  }
  return {ok, "matching/ridge mean L2 gap to PM:" + os.str()};
}

Verdict shrinkage_trend() {
  auto c = ex::load_config(kSource / "configs" / "poisson_shrinkage.json");
  c.n_grid = {1, 10, 100};
  ex::apply_desk_preset(c);
  const auto r = ex::run_experiment(c);
  const auto m = mean_l2(r);
  bool ok = c.dim == 100 && c.chain.length == 5000;
  std::ostringstream os;
  for (std::size_t n : c.n_grid) {
    const double a = m.count({n, "matching-pm"}) ? m.at({n, "matching-pm"}) : NAN;
    const double b = m.count({n, "komaki-pm"}) ? m.at({n, "komaki-pm"}) : NAN;
    if (!(a < b)) ok = false;
    os << " n=" << n << ":" << fmt("%.4f", a) << "/" << fmt("%.4f", b);
  }
  return {ok, "matching/komaki PM L2 gap to MAP:" + os.str()};
}

Verdict cauchy_check() {
  const auto c = ex::load_config(kSource / "configs" / "cauchy_d10.json");
  const auto r = ex::run_experiment(c);
  const std::string ref = "pm-rwmh-" + std::to_string(c.checkpoints.back());
  const ex::GapRecord* cal = nullptr;
  const ex::GapRecord* pm = nullptr;
  for (const auto& g : r.records) {
    if (g.rep != 0) continue;
    if (g.label == "calibrated") cal = &g;
    if (g.label == ref) pm = &g;
  }
  if (!cal || !pm || cal->status != "ok" || pm->status != "ok") return {false, "missing calibrated or reference row"};
  if (c.dim != 10 || c.n_grid != std::vector<std::size_t>{10} || c.checkpoints.back() != 50000)
    return {false, "config is not d=10, n=10, M=50000"};
  int inside = 0;
  double worst = 0;
  for (Index i = 0; i < cal->gap.size(); ++i) {
    const double z = cal->gap(i) / pm->mc_se(i);
    worst = std::max(worst, z);
    inside += z < 3.0;
  }
  return {inside == cal->gap.size(), std::to_string(inside) + "/" + std::to_string(cal->gap.size()) +
                                         " coordinates within 3 mc_se, max |gap|/mc_se " + fmt("%.2f", worst) +
                                         " (seed " + std::to_string(c.seed) + ")"};
}

// -------------------------------------------------------------------- 10

Verdict sampler_oracles() {
  std::ostringstream os;
  bool ok = true;
  {
    Rng rng(110);
    const std::size_t n = 80;
    std::vector<double> x(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      x[2 * i] = 1.0;
      x[2 * i + 1] = static_cast<double>(i + 1) / n;
    }
    auto lg = std::make_shared<LogisticGlm>(2, x);
    const Dataset d = logistic_data(rng, x, 2, (Vector(2) << 0.0, 1.0).finished());
    const Prior np = normal_prior(2, 0.0, 1.0);
    const Vector init = mle(*lg, d, Vector::Zero(2)).point;
    const auto pg = polya_gamma_gibbs(x, 2, d.responses(), GaussianPriorSpec::isotropic(2, 0, 1), chain(20000, 2000, 3), init);
    const auto rw = rwmh(*lg, d, np, chain(60000, 5000, 4), {}, init);
    const auto q = quad_posterior_mean(*lg, d, np, QuadratureSpec{1e-9, 4000, std::nullopt});
    double zmax = 0;
    for (Index j = 0; j < 2; ++j) {
      const double z1 = std::abs(pg.posterior_mean(j) - q.value(j)) / pg.mc_se(j);
      const double z2 = std::abs(rw.posterior_mean(j) - q.value(j)) / rw.mc_se(j);
      const double z3 = std::abs(pg.posterior_mean(j) - rw.posterior_mean(j)) / std::hypot(pg.mc_se(j), rw.mc_se(j));
      zmax = std::max({zmax, z1, z2, z3});
    }
    ok = ok && zmax < 3;
    os << "logistic max z " << fmt("%.2f", zmax);
  }
  {
    PoissonRate pr;
    const Dataset d = poisson_with_sum(3, 4);
    const double q = quad_posterior_mean(pr, d, komaki_prior(v1(3.0), 1.5, 0.0)).value(0);
    const auto c = komaki_gibbs(v1(4.0), 3, v1(3.0), 1.5, chain(40000, 2000, 5));
    const double z = std::abs(c.posterior_mean(0) - q) / c.mc_se(0);
    ok = ok && z < 3;
    os << ", komaki d=1 z " << fmt("%.2f", z);
  }
  {
    PoissonSequence ps(2);
    const Dataset d(2, {0, 3, 1, 5}, 0, {});
    const Vector beta = Vector::Constant(2, 3.0);
    const Vector q = quad_posterior_mean(ps, d, komaki_prior(beta, 5.0, 0.0), QuadratureSpec{1e-9, 4000, std::nullopt}).value;
    const auto c = komaki_gibbs((Vector(2) << 1, 8).finished(), 2, beta, 5.0, chain(40000, 2000, 6));
    const double z = ((c.posterior_mean - q).cwiseAbs().array() / c.mc_se.array()).maxCoeff();
    ok = ok && z < 3;
    os << ", komaki d=2 max z " << fmt("%.2f", z);
  }
  return {ok, os.str()};
}

// -------------------------------------------------------------------- 11

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "matchprior_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string fixtures = (kSource / "tests" / "fixtures").string();
  const std::vector<std::pair<std::string, std::string>> configs{
      {"logistic", R"({"experiment":"logistic-synthetic","scenario":1,"n_grid":[16,32,64],"repetitions":3,
                       "chain":{"length":500,"burnin":200},"seed":7})"},
      {"scenario2", R"({"experiment":"logistic-synthetic","scenario":2,"n_grid":[16,32],"repetitions":1,
                        "chain":{"length":500,"burnin":200},"seed":7})"},
      {"banknote", R"({"experiment":"banknote","data":")" + fixtures + R"(/banknote_synthetic.txt","n_grid":[32,64],
                       "repetitions":3,"chain":{"length":500,"burnin":200},"seed":7})"},
      {"shrinkage", R"({"experiment":"poisson-shrinkage","dim":20,"n_grid":[1,10],"repetitions":2,
                        "chain":{"length":1000,"burnin":100},"seed":7})"},
      {"counts", R"({"experiment":"poisson-shrinkage","generator":"csv","data":")" + fixtures +
                     R"(/counts_two_periods.csv","n_grid":[1,2],"chain":{"length":1000,"burnin":100},"seed":7})"},
      {"cauchy", R"({"experiment":"cauchy-calibration","dim":3,"n_grid":[10],"repetitions":2,
                     "chain":{"burnin":200},"checkpoints":[500,2000],"seed":7})"},
      {"timing", R"({"experiment":"timing","target":"poisson-shrinkage","dim":10,"n_grid":[1,10],"repetitions":3,
                     "chain":{"length":500,"burnin":100},"seed":7})"}};
  std::ostringstream os;
  bool ok = true;
  for (const auto& [name, text] : configs) {
    const fs::path cfg = dir / (name + ".json");
    std::ofstream(cfg) << text;
    std::string outs[2];
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / (name + "_" + std::to_string(run));
      const std::string cmd = "MATCHPRIOR_THREADS=" + std::to_string(run + 1) + " \"" + kCli + "\" run \"" +
                              cfg.string() + "\" --output \"" + out.string() + "\" 2>/dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, name + ": CLI run failed"};
      outs[run] = slurp(out / "records.csv");
    }
    const bool same = !outs[0].empty() && outs[0] == outs[1];
    ok = ok && same;
    os << name << (same ? " identical" : " DIFFERENT") << "; ";
  }
  return {ok, os.str() + "runs used 1 and 2 workers"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "exact e-flat matching on Gaussian precision", 1.0, exact_eflat},
      {2, "exact m-flat matching on Poisson", 0, exact_mflat},
      {3, "matching residual vanishes for constructed pairs", 0, residual_zero},
      {4, "geometry identities", 0, geometry_identities},
      {5, "calibration rate on Poisson-Gamma", 10.0, calibration_rate},
      {6, "expansion remainders are o(1/n)", 0, expansion_rates},
      {7, "logistic scenario 1 gap ordering (desk)", 300.0, logistic_trend},
      {8, "Poisson shrinkage gap ordering (desk)", 180.0, shrinkage_trend},
      {9, "Cauchy calibration against RWMH at M=50000", 120.0, cauchy_check},
      {10, "sampler oracles", 0, sampler_oracles},
      {11, "CLI determinism of records.csv", 0, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = v.pass;
    std::string timing = fmt("%.2f s", secs);
    if (c.limit_s > 0) {
      timing += " (limit " + fmt("%g", c.limit_s) + " s)";
      if (secs >= c.limit_s) pass = false;
    }
    failed += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << v.detail << "; " << timing
              << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

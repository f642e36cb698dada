#include "support.hpp"

#include "matchprior/priors/prior.hpp"

using namespace mpt;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }

void check_grad_fd(const Prior& p, const Vector& th) {
  const Vector g = p.log_grad(th);
  for (Index a = 0; a < th.size(); ++a) {
    const double h = 1e-6 * std::max(1.0, std::abs(th(a)));
    Vector up = th, dn = th;
    up(a) += h;
    dn(a) -= h;
    const double fd = (p.log_density(up) - p.log_density(dn)) / (2.0 * h);
    CHECK(std::abs(fd - g(a)) <= 1e-6 * std::max(1.0, std::abs(g(a))));
  }
}

struct Case {
  ModelPtr model;
  Prior pm;
  bool eflat;
};

std::vector<Case> matching_cases() {
  Rng rng(31);
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  auto pr = std::make_shared<PoissonRate>();
  auto ps = std::make_shared<PoissonSequence>(5);
  auto lg = std::make_shared<LogisticGlm>(2, random_design(rng, 30, 2));
  auto pl = std::make_shared<PoissonLogRate>();
  return {{gp, gamma_prior(1, 2.0, 1.5), true},
          {pr, gamma_prior(1, 1.5, 0.5), false},
          {ps, gamma_prior(5, 2.0, 1.0), false},
          {lg, normal_prior(2, 0.0, 1.0), true},
          {pl, normal_prior(1, 0.0, 4.0), true}};
}

}  // namespace

TEST_CASE("catalog gradients match finite differences") {
  Rng rng(1);
  auto pr = std::make_shared<PoissonRate>();
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  const std::vector<Prior> ps{normal_prior(2, 0.5, 2.0),
                              gamma_prior(2, 2.5, 1.5),
                              invgamma_prior(2, 3.0, 2.0),
                              komaki_prior(Vector::Constant(2, 3.0), 5.0, 0.0),
                              komaki_prior(Vector::Constant(2, 0.5), 0.3, 0.0),
                              jeffreys_prior(std::make_shared<PoissonSequence>(2)),
                              times_coordinates(gamma_prior(2, 2.0, 1.0), 1.0),
                              times_coordinates(gamma_prior(2, 2.0, 1.0), -1.0)};
  for (const auto& p : ps) {
    CAPTURE(p.label);
    for (int rep = 0; rep < 50; ++rep) check_grad_fd(p, (Vector(2) << std::exp(uniform_in(rng, -1, 1.5)), std::exp(uniform_in(rng, -1, 1.5))).finished());
  }
  for (const auto& p : {eflat_map_partner(gamma_prior(1, 2, 1), gp), mflat_map_partner(gamma_prior(1, 2, 1), pr)})
    for (int rep = 0; rep < 20; ++rep) check_grad_fd(p, v1(std::exp(uniform_in(rng, -1, 1.5))));
}

TEST_CASE("propriety flags") {
  CHECK(normal_prior(1, 0, 1).proper);
  CHECK(gamma_prior(1, 1, 1).proper);
  CHECK(!uniform_prior(Box::real_line(1)).proper);
  CHECK(!jeffreys_prior(std::make_shared<PoissonRate>()).proper);
  CHECK(!komaki_prior(Vector::Constant(2, 3.0), 5.0, 0.0).proper);
  CHECK(!eflat_map_partner(gamma_prior(1, 2, 1), std::make_shared<GaussianPrecision>(0.0)).proper);
}

TEST_CASE("komaki prior") {
  const Prior k = komaki_prior(Vector::Constant(2, 3.0), 5.0, 0.0);
  const Vector g = k.log_grad(Vector::Ones(2));
  CHECK(g(0) == doctest::Approx(-0.5));
  CHECK(g(1) == doctest::Approx(-0.5));
  const Vector tiny = k.log_grad((Vector(2) << 1e-9, 1.0).finished());
  CHECK(std::isfinite(tiny(0)));
  CHECK(std::isfinite(tiny(1)));
  CHECK(thrown_kind([] { komaki_prior(Vector::Constant(2, -1.0), 5.0, 0.0); }) == ErrorKind::InvalidHyperparameter);
  CHECK(thrown_kind([] { komaki_prior(Vector::Constant(2, 3.0), -5.0, 0.0); }) == ErrorKind::InvalidHyperparameter);
  CHECK(thrown_kind([] { komaki_prior(Vector::Constant(2, 3.0), 5.0, -1.0); }) == ErrorKind::InvalidHyperparameter);
  const Prior f = komaki_prior(Vector::Constant(3, 3.0), 8.0, 1e-3);
  CHECK(f.support[0].lo == 1e-3);
}

TEST_CASE("matching residual vanishes for constructed partners at random support points") {
  Rng rng(2);
  for (const auto& c : matching_cases()) {
    const Prior map = c.eflat ? eflat_map_partner(c.pm, c.model) : mflat_map_partner(c.pm, c.model);
    const MatchingPair pair{c.pm, map, c.eflat ? PairConstruction::EFlat : PairConstruction::MFlat, 0.0};
    CAPTURE(map.label);
    for (int rep = 0; rep < 50; ++rep) {
      const Vector th = interior_point(rng, *c.model);
      CHECK(matching_residual(pair, *c.model, th).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("worked examples of matching pairs") {
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  const Prior pm = gamma_prior(1, 2.0, 3.0);
  const Prior map = eflat_map_partner(pm, gp);
  for (double th : {0.3, 1.0, 4.2}) {
    // (a-1) log th - b th + log th, up to a constant.
    const double expect = (2.0 - 1.0) * std::log(th) - 3.0 * th + std::log(th);
    CHECK(map.log_density(v1(th)) - map.log_density(v1(1.0)) == doctest::Approx(expect - (-3.0)).epsilon(1e-12));
    CHECK(matching_residual(pm, map, *gp, v1(th))(0) == doctest::Approx(0.0).epsilon(1e-12));
  }
  CHECK(map.label == pm.label + "/jeffreys");

  auto pr = std::make_shared<PoissonRate>();
  const Prior pmp = gamma_prior(1, 1.5, 2.0);
  const Prior lam = times_coordinates(pmp, 1.0);
  const Prior mf = mflat_map_partner(pmp, pr);
  for (double l : {0.2, 1.0, 6.0}) {
    CHECK(matching_residual(pmp, lam, *pr, v1(l))(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((mf.log_grad(v1(l)) - lam.log_grad(v1(l))).norm() < 1e-12);
  }

  auto ps = std::make_shared<PoissonSequence>(2);
  const Prior pm2 = gamma_prior(2, 2.0, 1.0);
  const Prior mf2 = mflat_map_partner(pm2, ps);
  const Vector l2 = (Vector(2) << 0.7, 3.1).finished();
  CHECK((mf2.log_grad(l2) - times_coordinates(pm2, 1.0).log_grad(l2)).norm() < 1e-12);
}

TEST_CASE("partners of Jeffreys-type priors are uniform") {
  Rng rng(3);
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  auto pr = std::make_shared<PoissonRate>();
  const Prior u1 = eflat_map_partner(jeffreys_prior(gp), gp);
  const Prior j2 = times_jeffreys(jeffreys_prior(pr), pr, 1.0, "*jeffreys");
  const Prior u2 = mflat_map_partner(j2, pr);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector th = interior_point(rng, *gp);
    CHECK(u1.log_grad(th).norm() < 1e-12);
    CHECK(u2.log_grad(th).norm() < 1e-12);
  }
}

TEST_CASE("identical priors on a symmetric logistic design leave the Jeffreys gradient") {
  // Symmetric two-point design: rows (1, x) and (1, -x) repeated.
  std::vector<double> x;
  for (double v : {0.4, -0.4, 1.3, -1.3}) {
    x.push_back(1.0);
    x.push_back(v);
  }
  auto lg = std::make_shared<LogisticGlm>(2, x);
  const Prior p = normal_prior(2, 0.0, 1.0);
  const Vector th = Vector::Zero(2);
  const Vector r = matching_residual(p, p, *lg, th);
  CHECK((r + jeffreys_log_grad(*lg, th)).norm() < 1e-12);
  const Vector off = (Vector(2) << 0.5, 0.2).finished();
  CHECK(matching_residual(p, p, *lg, off).norm() > 1e-3);
}

TEST_CASE("logistic e-flat partner is pm times the Fisher determinant to the -1/2") {
  Rng rng(4);
  const auto x = random_design(rng, 30, 2);
  auto lg = std::make_shared<LogisticGlm>(2, x);
  const Prior pm = normal_prior(2, 0.0, 1.0);
  const Prior map = eflat_map_partner(pm, lg);
  const Vector b0 = Vector::Zero(2);
  for (int rep = 0; rep < 10; ++rep) {
    const Vector b = uniform_vector(rng, 2, -1, 1);
    const double lhs = map.log_density(b) - map.log_density(b0);
    const double rhs = pm.log_density(b) - pm.log_density(b0) -
                       0.5 * (std::log(lg->fisher(b).determinant()) - std::log(lg->fisher(b0).determinant()));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("family checks") {
  auto pr = std::make_shared<PoissonRate>();
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  CHECK(thrown_kind([&] { eflat_map_partner(gamma_prior(1, 1, 1), pr); }) == ErrorKind::FamilyMismatch);
  CHECK(thrown_kind([&] { mflat_map_partner(gamma_prior(1, 1, 1), gp); }) == ErrorKind::FamilyMismatch);
  CHECK(thrown_kind([&] { matching_residual(gamma_prior(1, 1, 1), gamma_prior(1, 1, 1), *pr, v1(-1.0)); }) ==
        ErrorKind::SupportMismatch);
  CHECK(thrown_kind([&] { matching_residual(gamma_prior(2, 1, 1), gamma_prior(2, 1, 1), *pr, Vector::Ones(2)); }) ==
        ErrorKind::SupportMismatch);
}

TEST_CASE("scaling pm leaves partner gradients unchanged") {
  Rng rng(5);
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  const Prior pm = gamma_prior(1, 2.0, 1.0);
  Prior scaled = pm;
  scaled.log_density = [base = pm.log_density](const Vector& t) { return base(t) + 17.0; };
  const Prior a = eflat_map_partner(pm, gp);
  const Prior b = eflat_map_partner(scaled, gp);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector th = interior_point(rng, *gp);
    CHECK((a.log_grad(th) - b.log_grad(th)).norm() == 0.0);
  }
}

TEST_CASE("e-flat partner twice with uniform Jeffreys is the identity") {
  Rng rng(6);
  auto gl = std::make_shared<GaussianLocation>(2, 1.0);
  // GaussianLocation has constant Fisher, so pi_J is uniform.
  const Prior pm = normal_prior(2, 0.3, 2.0);
  const Prior twice = eflat_map_partner(eflat_map_partner(pm, gl), gl);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector th = uniform_vector(rng, 2, -2, 2);
    CHECK((twice.log_grad(th) - pm.log_grad(th)).norm() < 1e-12);
  }
}

TEST_CASE("alpha pair target gradient") {
  Rng rng(7);
  auto pr = std::make_shared<PoissonRate>();
  auto ps = std::make_shared<PoissonSequence>(3);
  for (ModelPtr m : {ModelPtr(pr), ModelPtr(ps)}) {
    for (int rep = 0; rep < 10; ++rep) {
      const Vector th = interior_point(rng, *m);
      const auto r = geometry_at(*m, th);
      const Vector j = jeffreys_log_grad(*m, th);
      CHECK((alpha_pair_target_grad(r, 1.0) - j).norm() < 1e-12);
      CHECK((alpha_pair_target_grad(r, -1.0) - 2.0 * j).norm() < 1e-10);
      // T_a = -2 d log pi_J on m-flat models.
      CHECK((r.T_a + 2.0 * j).norm() < 1e-10);
    }
  }
  PoissonLogRate pl;
  CHECK(alpha_pair_target_grad(geometry_at(pl, v1(0.0)), 1.0)(0) == doctest::Approx(0.5));
}

TEST_CASE("one-dimensional ODE partner reproduces the moment-matching condition") {
  auto gp = std::make_shared<GaussianPrecision>(0.0);
  auto pr = std::make_shared<PoissonRate>();
  for (ModelPtr m : {ModelPtr(gp), ModelPtr(pr)}) {
    // With map uniform, pm solves d log pm = d log pi_J + (1/2) g^11 Gamma^(e)_111.
    const Prior pm = uniform_prior(m->support());
    const Prior map = ode_map_partner(pm, m, 1.0);
    CHECK(map.label == pm.label + "/ode");
    for (double th : {0.2, 0.9, 3.7}) {
      CHECK(std::abs(matching_residual(pm, map, *m, v1(th))(0)) < 1e-8);
    }
  }
  // Gaussian precision: Gamma^(e) = 0, so the integral is log pi_J = -log theta.
  CHECK(ode_log_ratio(*gp, 1.0, 2.5) == doctest::Approx(-std::log(2.5)).epsilon(1e-10));
  // Poisson: d log pi_J = -1/(2 lambda), (1/2) g^11 Gamma^(e) = -1/(2 lambda); total -log lambda.
  CHECK(ode_log_ratio(*pr, 1.0, 3.0) == doctest::Approx(-std::log(3.0)).epsilon(1e-10));
}

TEST_CASE("prior catalog parsing") {
  auto pr = std::make_shared<PoissonRate>();
  auto ps = std::make_shared<PoissonSequence>(3);
  CHECK(parse_prior("gamma(2,3)", pr).log_grad(v1(1.0))(0) == doctest::Approx(1.0 - 3.0));
  CHECK(parse_prior("normal(0,4)", pr).proper);
  CHECK(parse_prior("gamma(2,3)*coords", pr).log_grad(v1(2.0))(0) == doctest::Approx(2.0 / 2.0 - 3.0));
  CHECK(parse_prior("gamma(2,3)/jeffreys2", pr).log_grad(v1(2.0))(0) == doctest::Approx(2.0 / 2.0 - 3.0));
  const Prior k = parse_prior("komaki(3,auto,0.001)", ps);
  CHECK(k.support[0].lo == 0.001);
  CHECK(k.log_grad(Vector::Ones(3))(0) == doctest::Approx(2.0 - 8.0 / 3.0));
  CHECK(parse_prior("komaki(3,auto,0.001)/coords", ps).log_grad(Vector::Ones(3))(0) ==
        doctest::Approx(1.0 - 8.0 / 3.0));
  CHECK(parse_prior(" jeffreys ", pr).log_grad(v1(2.0))(0) == doctest::Approx(-0.25));
  CHECK(parse_prior("uniform", pr).log_grad(v1(2.0)).norm() == 0.0);
  for (const char* bad : {"", "gamma(2)", "gamma(2,x)", "gumbo(1,2)", "gamma(2,3)/foo", "normal(0,-1)"})
    CHECK(thrown_kind([&] { parse_prior(bad, pr); }) != ErrorKind::NotConverged);
  CHECK(thrown_kind([&] { parse_prior("gamma(2,3)/foo", pr); }) == ErrorKind::ParseError);
}

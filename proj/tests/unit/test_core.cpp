#include "support.hpp"

#include <set>

using namespace mpt;

TEST_CASE("Tensor3 symmetrization and contraction") {
  Tensor3 t(2);
  t(0, 0, 1) = 3.0;
  CHECK(!t.is_symmetric(1e-12));
  t.symmetrize();
  CHECK(t.is_symmetric(1e-15));
  CHECK(t(0, 1, 0) == doctest::Approx(1.0));
  CHECK(t(1, 0, 0) == doctest::Approx(1.0));

  Tensor3 u(2);
  u.set_symmetric(0, 1, 1, 2.0);
  const Matrix m = (Matrix(2, 2) << 1, 2, 3, 4).finished();
  const Vector last = u.contract_last_two(m);
  CHECK(last(0) == doctest::Approx(2.0 * 4));
  CHECK(last(1) == doctest::Approx(2.0 * 2 + 2.0 * 3));
  const Vector first = u.contract_first_two_by(m);
  CHECK(first(1) == doctest::Approx(2.0 * 2 + 2.0 * 3));
  CHECK(first(0) == doctest::Approx(2.0 * 4));
}

TEST_CASE("Box operations") {
  const Box b = Box::positive(2);
  CHECK(b.contains_open((Vector(2) << 1, 2).finished()));
  CHECK(!b.contains_open((Vector(2) << 0, 2).finished()));
  CHECK(b.contains_closed((Vector(2) << 0, 2).finished()));
  const Vector p = b.project((Vector(2) << -1, 2).finished());
  CHECK(p(0) == 0.0);
  CHECK(thrown_kind([&] { b.intersect(Box::positive(3)); }) == ErrorKind::SupportMismatch);
  const Box k = b.intersect(Box::uniform(2, Interval{0.5, 3.0}));
  CHECK(k[0].lo == 0.5);
  CHECK(k[1].hi == 3.0);
}

TEST_CASE("Dataset construction and invariants") {
  CHECK(thrown_kind([] { Dataset(std::vector<Observation>{}); }) == ErrorKind::InvalidArgument);
  CHECK(thrown_kind([] { Dataset(std::vector<Observation>{{{1}, {}}, {{1, 2}, {}}}); }) == ErrorKind::InvalidArgument);
  CHECK(thrown_kind([] { Dataset(std::vector<Observation>{{{1}, {0.5}}, {{1}, {}}}); }) == ErrorKind::InvalidArgument);
  const Dataset d(std::vector<Observation>{{{1, 2}, {0.5}}, {{3, 4}, {1.5}}});
  CHECK(d.size() == 2);
  CHECK(d.response_sums() == std::vector<double>{4, 6});
  CHECK(d.with_intercept().covariate_dim() == 2);
  CHECK(d.with_intercept()[1].covariates[0] == 1.0);
  const std::vector<std::size_t> rows{1};
  CHECK(d.select(rows)[0].response[0] == 3.0);
}

TEST_CASE("CSV ingestion") {
  const Dataset d = parse_csv("y,x1,x2\n1,0.5,2\n0,-1.5,3\n");
  CHECK(d.size() == 2);
  CHECK(d.covariate_dim() == 2);
  CHECK(d[1].covariates[0] == -1.5);
  const Dataset v = parse_csv("y2,y1\n3,4\n");
  CHECK(v.response_dim() == 2);
  CHECK(v[0].response[0] == 4.0);
  CHECK(thrown_kind([] { parse_csv("x1\n1\n"); }) == ErrorKind::ParseError);
  CHECK(thrown_kind([] { parse_csv("y,x2\n1,1\n"); }) == ErrorKind::ParseError);
  CHECK(thrown_kind([] { parse_csv("y\n1,2\n"); }) == ErrorKind::ParseError);
  CHECK(thrown_kind([] { parse_csv("y\nabc\n"); }) == ErrorKind::ParseError);
  CHECK(thrown_kind([] { parse_csv("y,y\n1,2\n"); }) == ErrorKind::ParseError);
}

TEST_CASE("banknote ingestion") {
  const Dataset d = parse_banknote("3.6,8.6,-2.8,-0.4,0\n-1.4,-0.9,2.1,0.3,1\n");
  CHECK(d.size() == 2);
  CHECK(d.covariate_dim() == 4);
  CHECK(d[1].response[0] == 1.0);
  CHECK(thrown_kind([] { parse_banknote("1,2,3,4\n"); }) == ErrorKind::ParseError);
  CHECK(thrown_kind([] { parse_banknote("1,2,3,4,2\n"); }) == ErrorKind::ParseError);
}

TEST_CASE("CSV round trip") {
  const auto path = std::filesystem::temp_directory_path() / "matchprior_roundtrip.csv";
  const Dataset d(2, {1, 2, 3, 4}, 1, {0.25, -7.5});
  write_csv(path, d);
  const Dataset e = load_csv(path);
  CHECK(std::vector<double>(e.responses().begin(), e.responses().end()) == std::vector<double>{1, 2, 3, 4});
  CHECK(std::vector<double>(e.covariates().begin(), e.covariates().end()) == std::vector<double>{0.25, -7.5});
  std::filesystem::remove(path);
}

TEST_CASE("Rng determinism, streams and seed derivation") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  Rng s0(42, 0), s1(42, 1);
  bool differ = false;
  for (int i = 0; i < 10; ++i) differ = differ || s0() != s1();
  CHECK(differ);
  std::set<std::uint64_t> seeds;
  for (std::uint64_t n = 0; n < 20; ++n)
    for (std::uint64_t r = 0; r < 20; ++r) seeds.insert(derive_seed(1, {n, r}));
  CHECK(seeds.size() == 400);
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("Rng distributions have the right first moments") {
  Rng r(123);
  const int m = 200000;
  double su = 0, sn = 0, sg = 0, sp = 0;
  for (int i = 0; i < m; ++i) {
    const double u = r.uniform();
    CHECK_MESSAGE((u > 0.0 && u < 1.0), "uniform escaped (0,1)");
    su += u;
    sn += r.normal();
    sg += r.gamma(3.0, 2.0);
    sp += static_cast<double>(r.poisson(2.5));
  }
  CHECK(su / m == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / m) < 0.01);
  CHECK(sg / m == doctest::Approx(1.5).epsilon(0.01));
  CHECK(sp / m == doctest::Approx(2.5).epsilon(0.01));
  CHECK(thrown_kind([&] { r.gamma(0.0, 1.0); }) == ErrorKind::InvalidHyperparameter);
}

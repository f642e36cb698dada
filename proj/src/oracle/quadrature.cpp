#include "matchprior/oracle/quadrature.hpp"

#include "matchprior/core/error.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace matchprior {
namespace {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

Segment kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7];
  double g = fc * kWg[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double x = h * kXgk[j];
    const double s = f(c - x) + f(c + x);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  k *= h;
  g *= h;
  if (!std::isfinite(k)) fail(ErrorKind::ToleranceNotMet, "integrand is not finite on the interval");
  return {a, b, k, std::abs(k - g)};
}

}  // namespace

QuadResult gauss_kronrod(const std::function<double(double)>& f, double a, double b, double abs_tol,
                         std::size_t max_subdivisions) {
  if (!(abs_tol > 0.0)) fail(ErrorKind::InvalidArgument, "quadrature tolerance must be positive");
  if (!std::isfinite(a) || !std::isfinite(b)) fail(ErrorKind::InvalidArgument, "finite interval required");
  if (a == b) return {0.0, 0.0, 0, true};
  std::priority_queue<Segment> heap;
  const Segment first = kronrod15(f, a, b);
  heap.push(first);
  double value = first.value;
  double error = first.error;
  std::size_t splits = 0;
  while (error > abs_tol && splits < max_subdivisions) {
    const Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= std::min(worst.a, worst.b) || mid >= std::max(worst.a, worst.b)) {
      heap.push(worst);
      break;
    }
    const Segment l = kronrod15(f, worst.a, mid);
    const Segment r = kronrod15(f, mid, worst.b);
    value += l.value + r.value - worst.value;
    error += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++splits;
    if (splits % 64 == 0) {
      // Re-sum to shed accumulated cancellation in the running totals.
      auto copy = heap;
      value = 0.0;
      error = 0.0;
      while (!copy.empty()) {
        value += copy.top().value;
        error += copy.top().error;
        copy.pop();
      }
    }
  }
  return {value, error, splits, error <= abs_tol};
}

QuadResult gauss_kronrod_upper(const std::function<double(double)>& f, double a, double abs_tol,
                               std::size_t max_subdivisions) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double u = 1.0 - t;
    const double v = f(a + t / u);
    return v == 0.0 ? 0.0 : v / (u * u);
  };
  return gauss_kronrod(g, 0.0, 1.0, abs_tol, max_subdivisions);
}

QuadResult gauss_kronrod_line(const std::function<double(double)>& f, double center, double scale, double abs_tol,
                              std::size_t max_subdivisions) {
  if (!(scale > 0.0)) fail(ErrorKind::InvalidArgument, "scale must be positive");
  auto up = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double u = 1.0 - t;
    const double v = f(center + scale * t / u);
    return v == 0.0 ? 0.0 : v * scale / (u * u);
  };
  auto dn = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double u = 1.0 - t;
    const double v = f(center - scale * t / u);
    return v == 0.0 ? 0.0 : v * scale / (u * u);
  };
  const QuadResult r1 = gauss_kronrod(up, 0.0, 1.0, 0.5 * abs_tol, max_subdivisions);
  const QuadResult r2 = gauss_kronrod(dn, 0.0, 1.0, 0.5 * abs_tol, max_subdivisions);
  return {r1.value + r2.value, r1.error + r2.error, r1.subdivisions + r2.subdivisions, r1.converged && r2.converged};
}

}  // namespace matchprior

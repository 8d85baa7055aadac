#include "invit/baselines.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "invit/error.hpp"
#include "invit/format.hpp"

namespace invit::baselines {

RootBracket bisect(const std::function<double(double)>& f, double lo, double hi, double tolerance) {
  RootBracket b{lo, hi, f(lo), f(hi), tolerance};
  if (b.f_lo == 0.0) return {lo, lo, 0.0, 0.0, tolerance};
  if (b.f_hi == 0.0) return {hi, hi, 0.0, 0.0, tolerance};
  if ((b.f_lo < 0.0) == (b.f_hi < 0.0)) {
    throw InvalidInput("no sign change on [" + format_g17(lo) + ", " + format_g17(hi) + "]");
  }
  while (b.hi - b.lo > tolerance) {
    const double mid = b.midpoint();
    if (mid <= b.lo || mid >= b.hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return {mid, mid, 0.0, 0.0, tolerance};
    if ((fm < 0.0) == (b.f_lo < 0.0)) {
      b.lo = mid;
      b.f_lo = fm;
    } else {
      b.hi = mid;
      b.f_hi = fm;
    }
  }
  return b;
}

namespace {

double bessel_series(int order, double x) {
  const double q = -0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * (k + order));
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
  }
  return sum;
}

// Miller's algorithm: backward recurrence from a high order, normalised by
// J0 + 2 (J2 + J4 + ...) = 1.
double bessel_miller(int order, double x) {
  int start = static_cast<int>(x + 40.0 + 10.0 * std::sqrt(x));
  start += start % 2;
  double next = 0.0;
  double current = 1e-300;
  double even_sum = 0.0;
  double j0 = 0.0;
  double j1 = 0.0;
  for (int k = start; k >= 1; --k) {
    const double previous = 2.0 * k / x * current - next;
    next = current;
    current = previous;  // now J_{k-1}
    if (std::abs(current) > 1e250) {
      current *= 1e-250;
      next *= 1e-250;
      even_sum *= 1e-250;
      j1 *= 1e-250;
    }
    if (k - 1 == 1) j1 = current;
    if ((k - 1) % 2 == 0 && k - 1 > 0) even_sum += current;
  }
  j0 = current;
  const double norm = j0 + 2.0 * even_sum;
  return (order == 0 ? j0 : j1) / norm;
}

}  // namespace

double bessel_j(int order, double x) {
  if (order != 0 && order != 1) throw InvalidInput("bessel_j supports orders 0 and 1");
  if (!(x >= 0.0 && x <= 50.0)) throw InvalidInput("bessel_j argument must lie in [0, 50], got " + format_g17(x));
  if (x == 0.0) return order == 0 ? 1.0 : 0.0;
  return x <= 12.0 ? bessel_series(order, x) : bessel_miller(order, x);
}

double bessel_j0_first_zero() {
  static const double zero = bisect([](double x) { return bessel_j(0, x); }, 2.4, 2.41, 1e-15).midpoint();
  return zero;
}

double robin_disk_lambda(double h) {
  if (!(h > 0.0)) throw InvalidInput("Robin h must be positive, got " + format_g17(h));
  const auto f = [h](double s) { return bessel_j(0, s) - h * s * bessel_j(1, s); };
  const double s = bisect(f, 0.0, bessel_j0_first_zero(), 1e-12).midpoint();
  return s * s;
}

double robin_square_lambda(double h) {
  if (!(h > 0.0)) throw InvalidInput("Robin h must be positive, got " + format_g17(h));
  const auto g = [h](double w) { return h * w * std::sin(0.5 * w) - std::cos(0.5 * w); };
  const double w = bisect(g, 0.0, std::numbers::pi, 1e-12).midpoint();
  return 2.0 * w * w;
}

double mixed_annulus_lambda_fd(double r0, int intervals) {
  if (!(r0 > 0.0 && r0 < 1.0)) throw InvalidInput("annulus r0 must lie in (0,1), got " + format_g17(r0));
  if (intervals < 2) throw InvalidInput("need at least 2 intervals");
  const int n = intervals;
  const double dr = (1.0 - r0) / n;
  const auto r = [r0, dr](double i) { return r0 + i * dr; };

  // Unknowns u_1..u_n; A u = lambda W u with tridiagonal A, diagonal W.
  std::vector<double> diag(n), off(n - 1), weight(n);
  for (int i = 1; i <= n; ++i) {
    const double left = r(i - 0.5) / dr;
    const double right = i < n ? r(i + 0.5) / dr : 0.0;
    diag[i - 1] = left + right;
    if (i < n) off[i - 1] = -right;
    weight[i - 1] = i < n ? r(i) * dr : 0.5 * dr * (r(n) - 0.25 * dr);
  }

  // Number of generalised eigenvalues below sigma (inertia of A - sigma W).
  const auto count_below = [&](double sigma) {
    int count = 0;
    double pivot = diag[0] - sigma * weight[0];
    if (pivot < 0.0) ++count;
    for (int i = 1; i < n; ++i) {
      if (pivot == 0.0) pivot = 1e-300;
      pivot = diag[i] - sigma * weight[i] - off[i - 1] * off[i - 1] / pivot;
      if (pivot < 0.0) ++count;
    }
    return count;
  };

  double lo = 0.0;
  double hi = 1.0;
  while (count_below(hi) == 0) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (count_below(mid) >= 1 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double mixed_annulus_lambda(double r0) {
  const double coarse = mixed_annulus_lambda_fd(r0, 2000);
  const double fine = mixed_annulus_lambda_fd(r0, 4000);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace invit::baselines

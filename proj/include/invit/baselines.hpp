#pragma once

#include <functional>

namespace invit::baselines {

/// Bisection state: an interval [lo, hi] over which f changes sign.
struct RootBracket {
  double lo = 0.0;
  double hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  double tolerance = 0.0;

  double midpoint() const { return 0.5 * (lo + hi); }
};

/// Shrinks [lo, hi] until hi - lo <= tolerance. Throws InvalidInput if f has
/// no sign change on the initial interval.
RootBracket bisect(const std::function<double(double)>& f, double lo, double hi, double tolerance = 1e-12);

/// Bessel function of the first kind, order 0 or 1, for 0 <= x <= 50.
/// Power series up to x = 12, Miller's backward recurrence beyond.
double bessel_j(int order, double x);

/// First positive zero of J0.
double bessel_j0_first_zero();

/// Principal Robin eigenvalue of the unit disk with constant h:
/// s^2 where J0(s) = h s J1(s), s in (0, j_{0,1}).
double robin_disk_lambda(double h);

/// Principal Robin eigenvalue of the unit square with constant h:
/// 2 w^2 where tan(w/2) = 1/(h w), w in (0, pi).
double robin_square_lambda(double h);

/// Principal eigenvalue of the radial problem -(r u')'/r = lambda u on
/// (r0, 1), u(r0) = 0, u'(1) = 0, from second-order finite differences on
/// `intervals` cells.
double mixed_annulus_lambda_fd(double r0, int intervals);

/// Richardson extrapolation of mixed_annulus_lambda_fd over 2000 and 4000 cells.
double mixed_annulus_lambda(double r0);

}  // namespace invit::baselines

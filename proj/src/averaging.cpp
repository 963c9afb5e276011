#include "bwp/averaging.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace bwp {

namespace {

using boost::math::quadrature::gauss_kronrod;

double param(const Params& p, const char* name) {
  auto it = p.find(name);
  if (it == p.end()) {
    throw std::invalid_argument(std::string("missing parameter '") + name + "'");
  }
  return it->second;
}

// Root of g on [a, b] to full double precision.
template <class G>
double solve(G&& g, double a, double b) {
  const double ga = g(a), gb = g(b);
  if (ga == 0.0) return a;
  if (gb == 0.0) return b;
  if ((ga > 0) == (gb > 0)) throw std::runtime_error("root not bracketed");
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      g, a, b, ga, gb, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

template <class F>
double gk(F&& f, double a, double b, double tol, int depth, double* err) {
  double e = 0.0;
  const double v = gauss_kronrod<double, 61>::integrate(f, a, b, depth, tol, &e);
  if (err) *err += e;
  return v;
}

void require_integrable(FamilyId f) {
  if (f != FamilyId::Tb24 && f != FamilyId::RevTb25) {
    throw std::invalid_argument("averaging is defined for tb-2.4 and rev-tb-2.5");
  }
}

FamilySpec unperturbed(FamilyId f) {
  if (f == FamilyId::Tb24) {
    return make_family(f, {{"eps", 0.0}, {"lambda", 0.0}, {"b", 0.0}});
  }
  return make_family(f, {{"a", 0.0}, {"b", 0.0}});
}

struct TurningPoints {
  double y_min, y_max;
};

TurningPoints turning_points(const PlanarSystem& ps, const PeriodicWindow& w,
                             double h) {
  auto g = [&](double y) { return ps.potential(y) - h; };
  double left = w.y_saddle, right;
  if (ps.family() == FamilyId::Tb24) {
    right = w.y_center + 1.0;
    while (g(right) <= 0.0) right = w.y_center + 2.0 * (right - w.y_center);
  } else {
    const auto eq = ps.equilibria();
    left = eq.front();
    right = eq.back();
  }
  return {solve(g, left, w.y_center), solve(g, w.y_center, right)};
}

// h - V(y) = (y - y_min)(y_max - y) q(y) with q > 0 on the orbit.
double reduced_gap(FamilyId f, double theta_value, double y, double ymin,
                   double ymax) {
  (void)theta_value;
  const double s = ymin + ymax;
  if (f == FamilyId::Tb24) return (y + s) / 6.0;
  const double c = s * s - ymin * ymax - 2.0;
  return -(y * y + s * y + c) / 4.0;
}

}  // namespace

double drift_integrand(FamilyId family, const Params& params, const State& s) {
  require_integrable(family);
  const double y = s[0], yd = s[1], ydd = s[2];
  if (family == FamilyId::Tb24) {
    return (param(params, "lambda") - y) * ydd + param(params, "b") * yd * yd;
  }
  return param(params, "a") * y * ydd + param(params, "b") * yd * yd;
}

PeriodicWindow periodic_window(const PlanarSystem& ps) {
  const auto eq = ps.equilibria();
  PeriodicWindow w;
  if (ps.family() == FamilyId::Tb24) {
    if (eq.size() != 2) {
      throw std::domain_error("tb-2.4 has periodic orbits only for Theta > 0");
    }
    w.y_saddle = eq[0];
    w.y_center = eq[1];
  } else {
    if (eq.size() != 3) {
      throw std::domain_error(
          "rev-tb-2.5 has periodic orbits only for |Theta| < 2 sqrt(3)/9");
    }
    w.y_center = eq[1];
    w.y_saddle = ps.potential(eq[2]) <= ps.potential(eq[0]) ? eq[2] : eq[0];
  }
  w.h_center = ps.potential(w.y_center);
  w.h_saddle = ps.potential(w.y_saddle);
  return w;
}

IntegrateOptions orbit_tolerances() {
  IntegrateOptions o;
  o.tol.rel = 1e-12;
  o.tol.abs = 1e-14;
  return o;
}

namespace {

void check_level(const PeriodicWindow& w, double h) {
  if (!(h > w.h_center)) {
    throw LevelOutOfWindow(LevelOutOfWindow::Side::CenterSide,
                           "level at or below the center value");
  }
  if (!(h < w.h_saddle)) {
    throw LevelOutOfWindow(LevelOutOfWindow::Side::HomoclinicSide,
                           "level at or above the homoclinic value");
  }
}

double period_between(const PlanarSystem& ps, double ymin, double ymax) {
  const double c = 0.5 * (ymin + ymax), a = 0.5 * (ymax - ymin);
  auto f = [&](double phi) {
    const double y = c + a * std::sin(phi);
    return 1.0 / std::sqrt(2.0 * reduced_gap(ps.family(), ps.theta_value(), y,
                                             ymin, ymax));
  };
  const double half = std::numbers::pi / 2;
  return 2.0 * gk(f, -half, half, 1e-14, 14, nullptr);
}

}  // namespace

double quadrature_period(const PlanarSystem& ps, double h) {
  const PeriodicWindow w = periodic_window(ps);
  check_level(w, h);
  const TurningPoints tp = turning_points(ps, w, h);
  return period_between(ps, tp.y_min, tp.y_max);
}

PeriodicOrbit periodic_orbit(const PlanarSystem& ps, double h,
                             const IntegrateOptions& options) {
  const PeriodicWindow w = periodic_window(ps);
  check_level(w, h);
  const TurningPoints tp = turning_points(ps, w, h);
  PeriodicOrbit po;
  po.family = ps.family();
  po.theta_value = ps.theta_value();
  po.h_value = h;
  po.y_min = tp.y_min;
  po.y_max = tp.y_max;
  po.period = period_between(ps, tp.y_min, tp.y_max);

  const FamilySpec spec = unperturbed(ps.family());
  IntegrateOptions opt = options;
  opt.fire_at_start = false;
  opt.dense = true;
  const EventSpec ev = coordinate_section(1, 0.0, +1);
  IntegrationResult r = integrate(spec, ps.embed(tp.y_min, 0.0), 0.0,
                                  1.5 * po.period, opt, std::span(&ev, 1));
  if (r.events.empty()) {
    throw std::runtime_error("periodic orbit did not close: " + r.message);
  }
  po.return_period = r.events.front().t;
  po.orbit = std::move(r.trajectory);
  return po;
}

DriftSample averaged_drift(FamilyId family, const Params& params,
                           double theta_value, double h_value,
                           const IntegrateOptions& options) {
  require_integrable(family);
  const PlanarSystem ps(family, theta_value);
  const PeriodicWindow w = periodic_window(ps);
  DriftSample d;
  d.theta_value = theta_value;
  d.h_value = h_value;
  if (std::abs(h_value - w.h_center) <= 1e-14 * std::max(1.0, std::abs(w.h_center))) {
    d.period = 2.0 * std::numbers::pi / std::sqrt(ps.curvature(w.y_center));
    return d;
  }
  const PeriodicOrbit po = periodic_orbit(ps, h_value, options);
  d.period = po.period;
  const double T = po.return_period;

  auto sums = [&](int n) {
    double st = 0.0, sh = 0.0;
    for (int k = 0; k < n; ++k) {
      const State x = po.orbit.at(T * k / n);
      const double i = drift_integrand(family, params, x);
      st += i;
      sh -= x[0] * i;
    }
    return std::pair{st * T / n, sh * T / n};
  };
  int n = 64;
  auto prev = sums(n);
  for (;;) {
    n *= 2;
    const auto cur = sums(n);
    const double err = std::max(std::abs(cur.first - prev.first),
                                std::abs(cur.second - prev.second));
    prev = cur;
    d.error_estimate = err;
    const double scale = 1.0 + std::max(std::abs(cur.first), std::abs(cur.second));
    if (err <= 1e-13 * scale || n >= 8192) break;
  }
  d.d_theta = prev.first;
  d.d_h = prev.second;
  d.samples = n;
  return d;
}

double melnikov_theta_limit(FamilyId family) {
  require_integrable(family);
  if (family == FamilyId::Tb24) return std::numeric_limits<double>::infinity();
  return 2.0 * std::sqrt(3.0) / 9.0;
}

namespace {

// tb-2.4 homoclinic in u = tanh(c t): y = s (2 - 3u^2), dt = du / (c (1-u^2)).
MelnikovResult melnikov_tb24(const Params& params, double th,
                             const MelnikovOptions& opt) {
  const double lambda = param(params, "lambda"), b = param(params, "b");
  const double s = std::sqrt(2.0 * th), c = 0.5 * std::sqrt(s);
  MelnikovResult r;
  r.theta_value = th;
  r.target_y = -s;
  double U;
  if (opt.t_star > 0.0) {
    U = std::tanh(c * opt.t_star);
  } else {
    U = std::sqrt(1.0 - 1e-12 / (3.0 * s));
  }
  r.t_star = std::atanh(U) / c;
  // I dt/du with the sech^2 factors cancelled.
  auto g = [&](double u) {
    const double y = s * (2.0 - 3.0 * u * u), w = 1.0 - u * u;
    return (lambda - y) * 1.5 * s * s * (3.0 * u * u - 1.0) / c +
           36.0 * b * s * s * c * u * u * w;
  };
  auto gy = [&](double u) { return -s * (2.0 - 3.0 * u * u) * g(u); };
  double err = 0.0;
  r.m_theta = gk(g, -U, U, opt.tolerance, opt.max_depth, &err);
  r.m_h = gk(gy, -U, U, opt.tolerance, opt.max_depth, &err);
  const double tail = 2.0 * (1.0 - U) *
                      std::max({std::abs(g(U)), std::abs(g(1.0)),
                                std::abs(gy(U)), std::abs(gy(1.0))});
  r.error_estimate = err + 2.0 * tail;
  return r;
}

// rev-tb-2.5 heteroclinic y = +-tanh(t / sqrt 2) at Theta = 0, u = tanh.
MelnikovResult melnikov_rev_hetero(const Params& params,
                                   const MelnikovOptions& opt) {
  const double a = param(params, "a"), b = param(params, "b");
  const double sigma = opt.orientation == Orientation::Increasing ? 1.0 : -1.0;
  MelnikovResult r;
  r.theta_value = 0.0;
  r.target_y = sigma;
  double U;
  if (opt.t_star > 0.0) {
    U = std::tanh(opt.t_star / std::sqrt(2.0));
  } else {
    U = 1.0 - 1e-12;
  }
  r.t_star = std::sqrt(2.0) * std::atanh(U);
  auto g = [&](double u) {
    return std::sqrt(2.0) * (-a * u * u + 0.5 * b * (1.0 - u * u));
  };
  auto gy = [&](double u) { return -sigma * u * g(u); };
  double err = 0.0;
  r.m_theta = gk(g, -U, U, opt.tolerance, opt.max_depth, &err);
  r.m_h = gk(gy, -U, U, opt.tolerance, opt.max_depth, &err);
  const double tail = 2.0 * (1.0 - U) *
                      std::max({std::abs(g(U)), std::abs(g(1.0)),
                                std::abs(gy(U)), std::abs(gy(1.0))});
  r.error_estimate = err + 2.0 * tail;
  return r;
}

// rev-tb-2.5 homoclinic loop to the lower saddle at Theta != 0, integrated
// over y.  With E - V = (y - ys)^2 (y - yt)(y - r4) / 4 and
// y = yt + (ys - yt) sigma^2 the integrands are smooth on [0, 1].
MelnikovResult melnikov_rev_loop(const Params& params, double th,
                                 const MelnikovOptions& opt) {
  const double a = param(params, "a"), b = param(params, "b");
  const double mirror = th < 0.0 ? -1.0 : 1.0;
  const double t = std::abs(th);
  const PlanarSystem ps(FamilyId::RevTb25, t);
  const auto eq = ps.equilibria();
  const double ys = eq[2], yc = eq[1];
  const double e = ps.potential(ys);
  const double yt = solve([&](double y) { return ps.potential(y) - e; }, eq[0], yc);
  const double r4 = -2.0 * ys - yt;
  const double len = ys - yt;

  // Integrand of int I dt over the loop, per d sigma (both halves).
  auto g = [&](double sg) {
    const double y = yt + len * sg * sg;
    const double yr = std::max(y - r4, 0.0);
    const double p = y * y + ys * y + ys * ys - 1.0;
    const double k = 2.0 * std::sqrt(2.0 * len / yr);
    const double term_a = -a * y * p * k;
    const double term_b = b * len * (1.0 - sg * sg) * std::sqrt(len) * sg *
                          std::sqrt(0.5 * yr) * 2.0 * len * sg;
    return 2.0 * (term_a + term_b);
  };
  auto gy = [&](double sg) {
    const double y = yt + len * sg * sg;
    return -y * g(sg);
  };
  MelnikovResult r;
  r.theta_value = th;
  double err = 0.0;
  r.m_theta = gk(g, 0.0, 1.0, opt.tolerance, opt.max_depth, &err);
  r.m_h = mirror * gk(gy, 0.0, 1.0, opt.tolerance, opt.max_depth, &err);
  r.target_y = mirror * ys;
  r.error_estimate = err;
  return r;
}

}  // namespace

MelnikovResult melnikov(FamilyId family, const Params& params,
                        double theta_value, const MelnikovOptions& opt) {
  require_integrable(family);
  if (!std::isfinite(theta_value)) throw std::domain_error("Theta must be finite");
  MelnikovResult r;
  if (family == FamilyId::Tb24) {
    if (!(theta_value > 0.0)) {
      throw std::domain_error("tb-2.4 homoclinics need Theta > 0");
    }
    r = melnikov_tb24(params, theta_value, opt);
  } else {
    const double lim = melnikov_theta_limit(family);
    if (!(std::abs(theta_value) < lim)) {
      throw std::domain_error("rev-tb-2.5 homoclinics need |Theta| < 2 sqrt(3)/9");
    }
    r = theta_value == 0.0 ? melnikov_rev_hetero(params, opt)
                           : melnikov_rev_loop(params, theta_value, opt);
  }
  r.m_split = r.m_h + r.target_y * r.m_theta;
  return r;
}

MelnikovZeroReport melnikov_zeros(FamilyId family, const Params& params,
                                  double lo, double hi, int n,
                                  MelnikovScan mode,
                                  const MelnikovOptions& opt) {
  require_integrable(family);
  if (n < 16) throw std::invalid_argument("melnikov_zeros needs n >= 16");
  if (!(hi > lo)) throw std::invalid_argument("empty Theta range");
  const double lim = melnikov_theta_limit(family);
  if (family == FamilyId::Tb24) {
    lo = std::max(lo, 1e-12);
  } else {
    const double edge = lim * (1.0 - 1e-9);
    lo = std::max(lo, -edge);
    hi = std::min(hi, edge);
  }
  if (!(hi > lo)) throw std::domain_error("Theta range outside the homoclinic range");

  MelnikovZeroReport rep;
  rep.theta_lo = lo;
  rep.theta_hi = hi;
  auto value = [&](const MelnikovResult& m) {
    return mode == MelnikovScan::Split ? m.m_split : m.m_theta;
  };
  auto eval = [&](double th) { return value(melnikov(family, params, th, opt)); };

  const bool log_spaced = lo > 0.0;
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / (n - 1);
    grid[i] = log_spaced ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                         : lo + f * (hi - lo);
  }
  grid.front() = lo;
  grid.back() = hi;
  std::vector<double> vals(n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    const MelnikovResult m = melnikov(family, params, grid[i], opt);
    rep.samples.emplace_back(grid[i], m);
    vals[i] = value(m);
    scale = std::max(scale, std::abs(vals[i]));
  }

  auto add_zero = [&](double th) {
    const double h = std::max(1e-6, 1e-4 * std::abs(th));
    double slope = 0.0;
    const bool inside = th - h > lo - 1e-15 && th + h < hi + 1e-15;
    if (inside) {
      slope = (eval(th + h) - eval(th - h)) / (2.0 * h);
    } else {
      slope = th - h <= lo ? (eval(th + h) - eval(th)) / h
                           : (eval(th) - eval(th - h)) / h;
    }
    rep.zeros.push_back({th, slope, std::abs(slope) > 1e-6});
  };

  for (int i = 0; i + 1 < n; ++i) {
    double a = grid[i], b = grid[i + 1], fa = vals[i], fb = vals[i + 1];
    if (fa == 0.0) {
      ++rep.sign_changes;
      add_zero(a);
      continue;
    }
    if (fa * fb >= 0.0) continue;
    ++rep.sign_changes;
    for (int it = 0; it < 200 && b - a > 1e-10; ++it) {
      const double m = 0.5 * (a + b), fm = eval(m);
      if (fm == 0.0) {
        a = b = m;
        fa = fb = 0.0;
        break;
      }
      if ((fm > 0) == (fa > 0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
        fb = fm;
      }
    }
    const double th = 0.5 * (a + b);
    if (std::min(std::abs(fa), std::abs(fb)) > 1e-6 * scale) {
      rep.discontinuities.push_back(th);
    } else {
      add_zero(th);
    }
  }
  if (vals.back() == 0.0) {
    ++rep.sign_changes;
    add_zero(grid.back());
  }
  rep.unique = rep.zeros.size() == 1;
  return rep;
}

}  // namespace bwp

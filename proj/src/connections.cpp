#include "bwp/connections.hpp"

#include "bwp/integrals.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bwp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

ManifoldSeeds manifold_seed(const FamilySpec& spec, double y_eq,
                            ManifoldDirection direction, double delta,
                            int n_ring) {
  if (spec.manifold_dim() != 1) {
    throw std::invalid_argument("manifold seeds need a line of equilibria");
  }
  if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
  const State x0 = spec.manifold_point(y_eq);
  if (spec.eval(x0).norm() > 1e-10 * (1.0 + x0.norm())) {
    throw std::invalid_argument("seed point is not an equilibrium");
  }
  const Matrix j = spec.jacobian(x0);
  const auto tr = spec.transverse_axes();
  const int nt = static_cast<int>(tr.size());
  Matrix b(nt, nt);
  for (int r = 0; r < nt; ++r) {
    for (int c = 0; c < nt; ++c) b(r, c) = j(tr[r], tr[c]);
  }
  Eigen::EigenSolver<Matrix> es(b, true);
  const double want = direction == ManifoldDirection::Unstable ? 1.0 : -1.0;
  int lead = -1;
  for (int i = 0; i < nt; ++i) {
    const double re = es.eigenvalues()[i].real() * want;
    if (re <= 0.0) continue;
    if (lead < 0 || re > es.eigenvalues()[lead].real() * want) lead = i;
  }
  if (lead < 0) {
    throw NoSeedError(std::string("no ") +
                      (direction == ManifoldDirection::Unstable ? "unstable" : "stable") +
                      " transverse eigenvalue at y = " + std::to_string(y_eq));
  }
  const Complex mu = es.eigenvalues()[lead];
  const double scale = std::max(1.0, std::abs(mu));
  for (int i = 0; i < nt; ++i) {
    if (i == lead) continue;
    const Complex o = es.eigenvalues()[i];
    if (std::abs(o - mu) <= 1e-8 * scale) {
      throw NoSeedError("leading eigenvalue is not simple");
    }
  }

  // Lift to the full space: the manifold rows follow from J v = mu v.
  const Eigen::VectorXcd vt = es.eigenvectors().col(lead);
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(spec.state_dim());
  for (int r = 0; r < nt; ++r) v[tr[r]] = vt[r];
  for (int a : spec.manifold_axes()) {
    Complex s = 0.0;
    for (int c = 0; c < nt; ++c) s += j(a, tr[c]) * vt[c];
    v[a] = s / mu;
  }

  ManifoldSeeds out;
  out.eigenvalue = mu;
  if (std::abs(mu.imag()) <= 1e-12 * scale) {
    const Eigen::VectorXd vr = v.real().normalized();
    out.seeds = {x0 + delta * vr, x0 - delta * vr};
  } else {
    out.ring = true;
    if (n_ring < 1) throw std::invalid_argument("ring needs at least one seed");
    for (int k = 0; k < n_ring; ++k) {
      const Complex rot = std::polar(1.0, kTwoPi * k / n_ring);
      const Eigen::VectorXd w = (rot * v).real();
      out.seeds.push_back(x0 + delta * w.normalized());
    }
  }
  return out;
}

State tb24_saddle_seed(double theta_value, double delta, bool unstable) {
  // |x - saddle| ~ 3 s sech^2(c t) ~ 12 s e^{-2c|t|}
  const double s = std::sqrt(2.0 * theta_value), c = 0.5 * std::sqrt(s);
  const double t = std::log(12.0 * s / delta) / (2.0 * c);
  return tb24_homoclinic(theta_value, unstable ? -t : t);
}

namespace {

Connection shoot(const FamilySpec& flow, const State& seed, double source_y,
                 int index, const HeteroclinicOptions& opt) {
  IntegrateOptions io = opt.integrate;
  io.near_equilibrium_eta = opt.eta;
  io.dense = true;
  IntegrationResult r = integrate(flow, seed, 0.0, opt.t_max, io);
  Connection c;
  c.source_y = source_y;
  c.backward = opt.backward;
  c.seed_index = index;
  c.status = r.status;
  const auto& xs = r.trajectory.states();
  const auto& ts = r.trajectory.times();
  const int axis = flow.manifold_axes().front();
  std::vector<double> d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) d[i] = flow.transverse_distance(xs[i]);
  std::size_t i0 = 0;
  while (i0 < d.size() && d[i0] < opt.exit_distance) ++i0;
  c.target_y = xs.back()[axis];
  c.flight_time = ts.back();
  // Closest approach: local minima of the distance after leaving the source
  // (refined on the dense output), or the end point when still approaching.
  auto consider = [&](double t, const State& x, double dist) {
    if (dist < c.closest_residual) {
      c.closest_residual = dist;
      c.target_y = x[axis];
      c.flight_time = t;
    }
  };
  for (std::size_t i = std::max<std::size_t>(i0, 1); i + 1 < d.size(); ++i) {
    if (!(d[i] <= d[i - 1] && d[i] < d[i + 1])) continue;
    const auto [tm, dm] = boost::math::tools::brent_find_minima(
        [&](double t) { return flow.transverse_distance(r.trajectory.at(t)); },
        std::min(ts[i - 1], ts[i + 1]), std::max(ts[i - 1], ts[i + 1]), 40);
    consider(tm, r.trajectory.at(tm), dm);
  }
  if (i0 < d.size() && d.size() > 1 && d.back() < d[d.size() - 2]) {
    consider(ts.back(), xs.back(), d.back());
  }
  c.homoclinic = std::abs(c.target_y - source_y) <= 1e-6 * std::max(1.0, std::abs(source_y));
  c.orbit = std::move(r.trajectory);
  return c;
}

}  // namespace

std::vector<Connection> shoot_seeds(const FamilySpec& spec, double source_y,
                                    const HeteroclinicOptions& opt) {
  const FamilySpec flow = opt.backward ? spec.time_reversed() : spec;
  const ManifoldSeeds seeds = manifold_seed(flow, source_y, ManifoldDirection::Unstable,
                                            opt.delta, opt.n_ring);
  std::vector<Connection> out;
  for (std::size_t k = 0; k < seeds.seeds.size(); ++k) {
    out.push_back(shoot(flow, seeds.seeds[k], source_y, static_cast<int>(k), opt));
  }
  return out;
}

Connection find_heteroclinic(const FamilySpec& spec, double source_y,
                             const HeteroclinicOptions& opt) {
  std::vector<Connection> shots = shoot_seeds(spec, source_y, opt);
  auto best = std::min_element(shots.begin(), shots.end(),
                               [](const Connection& a, const Connection& b) {
                                 return a.closest_residual < b.closest_residual;
                               });
  if (best->closest_residual <= opt.accept_tol) return std::move(*best);
  throw NoConnectionError("no seed reached the line of equilibria within " +
                              std::to_string(opt.accept_tol) + " (best " +
                              std::to_string(best->closest_residual) + ")",
                          std::move(*best));
}

SwarmCount count_connections(const FamilySpec& spec,
                             const std::vector<double>& sources,
                             const HeteroclinicOptions& opt,
                             double distinct_tol) {
  SwarmCount sc;
  for (double y : sources) {
    std::vector<Connection> shots;
    try {
      shots = shoot_seeds(spec, y, opt);
    } catch (const NoSeedError&) {
      continue;
    }
    for (const auto& c : shots) {
      if (!(c.closest_residual <= opt.accept_tol)) continue;
      const bool dup = std::any_of(sc.pairs.begin(), sc.pairs.end(), [&](const auto& p) {
        return std::abs(p.first - y) <= distinct_tol &&
               std::abs(p.second - c.target_y) <= distinct_tol;
      });
      if (!dup) sc.pairs.emplace_back(y, c.target_y);
    }
  }
  sc.connections = static_cast<int>(sc.pairs.size());
  return sc;
}

namespace {

// Real trigonometric interpolant of equispaced periodic samples.
class TrigInterpolant {
 public:
  explicit TrigInterpolant(const std::vector<double>& v) : n_(static_cast<int>(v.size())) {
    const int m = n_ / 2;
    a_.assign(m + 1, 0.0);
    b_.assign(m + 1, 0.0);
    for (int k = 0; k <= m; ++k) {
      double sa = 0.0, sb = 0.0;
      for (int j = 0; j < n_; ++j) {
        const double ang = kTwoPi * k * j / n_;
        sa += v[j] * std::cos(ang);
        sb += v[j] * std::sin(ang);
      }
      a_[k] = 2.0 * sa / n_;
      b_[k] = 2.0 * sb / n_;
    }
    a_[0] *= 0.5;
    if (n_ % 2 == 0) {
      a_[m] *= 0.5;
      b_[m] = 0.0;
    }
  }
  double operator()(double x) const {
    double s = a_[0];
    for (std::size_t k = 1; k < a_.size(); ++k) {
      s += a_[k] * std::cos(k * x) + b_[k] * std::sin(k * x);
    }
    return s;
  }
  double derivative(double x) const {
    double s = 0.0;
    for (std::size_t k = 1; k < a_.size(); ++k) {
      s += k * (-a_[k] * std::sin(k * x) + b_[k] * std::cos(k * x));
    }
    return s;
  }

 private:
  int n_;
  std::vector<double> a_, b_;
};

// Section trace of a seed ring: radius and polar angle as functions of the
// seed phase theta, angle written as theta + psi(theta) with psi periodic.
struct Trace {
  std::vector<double> theta, radius, psi;
};

Trace trace_ring(const FamilySpec& spec, double y_focus, bool backward,
                 const SplittingOptions& opt) {
  Trace tr;
  const int n = opt.n_seeds;
  const EventSpec sec = coordinate_section(2, opt.section_y, backward ? +1 : -1);
  IntegrateOptions io = opt.integrate;
  io.dense = false;
  double prev_psi = 0.0;
  for (int k = 0; k < n; ++k) {
    const double th = kTwoPi * k / n;
    State x0(3);
    x0 << opt.delta * std::cos(th), opt.delta * std::sin(th), y_focus;
    const IntegrationResult r = integrate(spec, x0, 0.0, backward ? -opt.t_max : opt.t_max,
                                          io, std::span(&sec, 1));
    if (r.events.empty()) {
      throw std::runtime_error("manifold trace did not reach the section (" +
                               std::string(status_name(r.status)) + ")");
    }
    const State& x = r.events.front().state;
    double psi = std::atan2(x[1], x[0]) - th;
    // Continuous in k.
    if (k == 0) {
      psi = std::remainder(psi, kTwoPi);
    } else {
      psi = prev_psi + std::remainder(psi - prev_psi, kTwoPi);
    }
    prev_psi = psi;
    tr.theta.push_back(th);
    tr.radius.push_back(std::hypot(x[0], x[1]));
    tr.psi.push_back(psi);
  }
  // psi must close up over one turn of theta (degree-one circle map).
  const double wrap = std::remainder(tr.psi.back() - tr.psi.front(), kTwoPi);
  if (std::abs(tr.psi.back() - tr.psi.front() - wrap) > 1e-6) {
    throw std::runtime_error("section trace is not a degree-one circle map");
  }
  return tr;
}

// Radius of the trace at polar angle phi.
double radius_at(const TrigInterpolant& rad, const TrigInterpolant& psi, double phi,
                 const Trace& tr) {
  // Initial guess: the sample whose angle is closest to phi.
  double th = 0.0, best = 1e300;
  for (std::size_t k = 0; k < tr.theta.size(); ++k) {
    const double d = std::abs(std::remainder(tr.theta[k] + tr.psi[k] - phi, kTwoPi));
    if (d < best) {
      best = d;
      th = tr.theta[k];
    }
  }
  for (int it = 0; it < 50; ++it) {
    const double g = std::remainder(th + psi(th) - phi, kTwoPi);
    const double dg = 1.0 + psi.derivative(th);
    const double step = g / dg;
    th -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return rad(th);
}

}  // namespace

SplittingMeasurement splitting_distance(const FamilySpec& spec, double r_scale,
                                        const SplittingOptions& opt) {
  if (spec.id() != FamilyId::Hopf23 || spec.param("sign") != -1.0) {
    throw std::invalid_argument("splitting is measured on hopf-2.3 with sign -1");
  }
  if (!(r_scale > opt.section_y) || !(-r_scale < opt.section_y)) {
    throw std::invalid_argument("section must lie between the two foci");
  }
  if (opt.n_seeds < 4 || opt.n_phase < 2) {
    throw std::invalid_argument("too few seeds or phases");
  }
  const Trace tu = trace_ring(spec, r_scale, false, opt);
  const Trace ts = trace_ring(spec, -r_scale, true, opt);
  const TrigInterpolant ru(tu.radius), pu(tu.psi), rs(ts.radius), ps(ts.psi);

  SplittingMeasurement m;
  m.r_scale = r_scale;
  double sum = 0.0;
  for (int j = 0; j < opt.n_phase; ++j) {
    const double phi = kTwoPi * j / opt.n_phase;
    const double a = radius_at(ru, pu, phi, tu), b = radius_at(rs, ps, phi, ts);
    m.phases.push_back(phi);
    m.gaps.push_back(a - b);
    m.gap = std::max(m.gap, std::abs(a - b));
    sum += 0.5 * (a + b);
  }
  m.mean_radius = sum / opt.n_phase;
  for (int j = 0; j < opt.n_phase; ++j) {
    const double a = m.gaps[j], b = m.gaps[(j + 1) % opt.n_phase];
    if ((a > 0 && b <= 0) || (a < 0 && b >= 0)) ++m.zero_count;
  }
  return m;
}

SplittingDecay splitting_decay(const FamilySpec& spec, double r_start,
                               int n_halvings, double noise_floor,
                               const SplittingOptions& opt) {
  SplittingDecay d;
  double r = r_start;
  for (int i = 0; i <= n_halvings; ++i, r *= 0.5) {
    d.measurements.push_back(splitting_distance(spec, r, opt));
    if (d.measurements.back().gap < noise_floor) break;
  }
  const auto& ms = d.measurements;
  std::vector<bool> ok;
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    if (ms[i].gap < noise_floor || ms[i + 1].gap < noise_floor) break;
    d.ratios.push_back(ms[i + 1].gap / ms[i].gap);
    ok.push_back(d.ratios.back() < 1.0 / 16.0);
  }
  // Smallest index i whose ratios i..end all pass.
  std::size_t first = ok.size();
  while (first > 0 && ok[first - 1]) --first;
  if (first < ok.size()) {
    d.r0 = ms[first].r_scale;
    d.resolved_below_r0 = true;
  }
  return d;
}

}  // namespace bwp

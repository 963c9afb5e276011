#include "bwp/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace bwp {

namespace {

// Dormand & Prince (1980) coefficients, with Shampine's continuous extension
// as used in Hairer's DOPRI5.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                 a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                 a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

State eval_dense(const Eigen::MatrixXd& c, double theta) {
  const double t1 = 1.0 - theta;
  return c.col(0) +
         theta * (c.col(1) +
                  t1 * (c.col(2) + theta * (c.col(3) + t1 * c.col(4))));
}

double sign_of(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

bool crosses(double g0, double g1, int direction) {
  if (direction >= 0 && g0 < 0.0 && g1 >= 0.0) return true;
  if (direction <= 0 && g0 > 0.0 && g1 <= 0.0) return true;
  return false;
}

}  // namespace

std::string_view status_name(IntegrationStatus s) {
  switch (s) {
    case IntegrationStatus::Completed: return "completed";
    case IntegrationStatus::EventTerminated: return "event";
    case IntegrationStatus::NearEquilibrium: return "near-equilibrium";
    case IntegrationStatus::BlowUp: return "blow-up";
    case IntegrationStatus::NonFinite: return "non-finite";
    case IntegrationStatus::StepUnderflow: return "step-underflow";
    case IntegrationStatus::MaxSteps: return "max-steps";
  }
  return "unknown";
}

const Trajectory::Segment& Trajectory::locate(double t) const {
  if (segments_.empty()) throw std::out_of_range("trajectory has no dense output");
  const bool bwd = backward();
  // Segments are ordered along the integration direction.
  auto it = std::partition_point(
      segments_.begin(), segments_.end(), [&](const Segment& s) {
        const double end = s.t0 + s.h;
        return bwd ? end > t : end < t;
      });
  if (it == segments_.end()) --it;
  return *it;
}

State Trajectory::at(double t) const {
  if (times_.empty()) throw std::out_of_range("empty trajectory");
  const double lo = std::min(t_begin(), t_end());
  const double hi = std::max(t_begin(), t_end());
  const double slack = 1e-12 * std::max(1.0, std::abs(hi - lo));
  if (t < lo - slack || t > hi + slack) {
    throw std::out_of_range("time outside trajectory span");
  }
  if (times_.size() == 1) return states_.front();
  const Segment& s = locate(t);
  const double theta = std::clamp((t - s.t0) / s.h, 0.0, 1.0);
  return eval_dense(s.coeffs, theta);
}

std::vector<std::pair<double, State>> Trajectory::sample(double dt) const {
  std::vector<std::pair<double, State>> out;
  if (times_.empty()) return out;
  const double span = t_end() - t_begin();
  const double step = std::abs(dt) * (span < 0 ? -1.0 : 1.0);
  const auto n = static_cast<std::size_t>(std::floor(std::abs(span) / std::abs(dt)));
  out.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = t_begin() + static_cast<double>(i) * step;
    out.emplace_back(t, at(t));
  }
  if (out.back().first != t_end()) out.emplace_back(t_end(), back());
  return out;
}

class DormandPrince {
 public:
  DormandPrince(const FieldFn& f, int dim, const IntegrateOptions& opt)
      : f_(f), opt_(opt), dim_(dim) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &tmp_, &y1_, &err_}) {
      v->resize(dim);
    }
  }

  IntegrationResult run(const State& x0, double t0, double t1,
                        std::span<const EventSpec> events) {
    IntegrationResult res;
    Trajectory& tr = res.trajectory;
    tr.dim_ = dim_;
    tr.tolerances = opt_.tol;
    tr.times_.push_back(t0);
    tr.states_.push_back(x0);

    if (!(opt_.tol.rel > 0.0) || !(opt_.tol.abs > 0.0)) {
      throw std::invalid_argument("tolerances must be positive");
    }
    if (!(t1 != t0) || !std::isfinite(t1)) {
      throw std::invalid_argument("degenerate integration span");
    }
    if (!x0.allFinite()) {
      res.status = IntegrationStatus::NonFinite;
      res.message = "non-finite initial state";
      return res;
    }

    const double dir = t1 > t0 ? 1.0 : -1.0;
    State y = x0;
    double t = t0;
    call(y, k1_);

    std::vector<double> g_prev(events.size());
    for (std::size_t e = 0; e < events.size(); ++e) {
      g_prev[e] = events[e].fn(y);
      // A start on the surface counts as "on", not as a side of it.
      if (std::abs(g_prev[e]) <= opt_.event_tol) g_prev[e] = 0.0;
      if (opt_.fire_at_start && events[e].direction == 0 &&
          std::abs(g_prev[e]) <= opt_.event_tol) {
        res.events.push_back({e, t, y});
        if (events[e].terminal) {
          res.status = IntegrationStatus::EventTerminated;
          return res;
        }
      }
    }
    if (opt_.near_equilibrium_eta && k1_.norm() <= *opt_.near_equilibrium_eta) {
      res.status = IntegrationStatus::NearEquilibrium;
      return res;
    }

    double h = initial_step(y, dir, std::abs(t1 - t0));
    double err_old = 1e-4;
    bool last_rejected = false;
    std::size_t steps = 0;

    while (true) {
      if (steps++ >= opt_.max_steps) {
        res.status = IntegrationStatus::MaxSteps;
        res.message = "step budget exhausted";
        return res;
      }
      if (dir * (t + h - t1) > 0.0) h = t1 - t;
      const double hmin = 16.0 * std::numeric_limits<double>::epsilon() *
                          std::max(1.0, std::abs(t));
      if (std::abs(h) < hmin) {
        res.status = IntegrationStatus::StepUnderflow;
        res.message = "step size underflow at t=" + std::to_string(t);
        return res;
      }

      const double err = attempt(y, h);
      ++tr.evaluations;
      if (!std::isfinite(err)) {
        h *= 0.1;
        ++tr.rejected_steps;
        last_rejected = true;
        continue;
      }
      if (err > 1.0) {
        const double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
        h *= last_rejected ? std::min(fac, 0.5) : fac;
        ++tr.rejected_steps;
        last_rejected = true;
        continue;
      }

      // Accepted: build the dense polynomial before k1 is overwritten.
      const double t_new = t + h;
      Eigen::MatrixXd coeffs(dim_, 5);
      coeffs.col(0) = y;
      coeffs.col(1) = y1_ - y;
      coeffs.col(2) = h * k1_ - coeffs.col(1);
      coeffs.col(3) = coeffs.col(1) - h * k7_ - coeffs.col(2);
      coeffs.col(4) = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ +
                           d6 * k6_ + d7 * k7_);
      ++tr.accepted_steps;

      // Events on this step.
      std::optional<EventHit> first;
      for (std::size_t e = 0; e < events.size(); ++e) {
        const double g1 = events[e].fn(y1_);
        if (crosses(g_prev[e], g1, events[e].direction)) {
          EventHit hit = locate_event(events[e], coeffs, t, h, g_prev[e], g1);
          hit.index = e;
          if (!first || dir * (hit.t - first->t) < 0.0) first = hit;
          if (!events[e].terminal) res.events.push_back(hit);
        }
        g_prev[e] = g1;
      }
      if (first && events[first->index].terminal) {
        res.events.push_back(*first);
        push_step(tr, t, h, coeffs, first->t, first->state);
        res.status = IntegrationStatus::EventTerminated;
        return res;
      }

      push_step(tr, t, h, coeffs, t_new, y1_);
      y = y1_;
      t = t_new;
      k1_ = k7_;  // FSAL

      if (!y.allFinite()) {
        res.status = IntegrationStatus::NonFinite;
        res.message = "non-finite state";
        return res;
      }
      if (y.lpNorm<Eigen::Infinity>() > opt_.blowup_norm) {
        res.status = IntegrationStatus::BlowUp;
        res.message = "state norm exceeded " + std::to_string(opt_.blowup_norm);
        return res;
      }
      if (opt_.near_equilibrium_eta && k1_.norm() <= *opt_.near_equilibrium_eta) {
        res.status = IntegrationStatus::NearEquilibrium;
        return res;
      }
      if (t == t1) {
        res.status = IntegrationStatus::Completed;
        return res;
      }

      // PI step-size control.
      const double e = std::max(err, 1e-10);
      double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(err_old, 0.4 / 5.0);
      fac = std::clamp(fac, 0.2, 10.0);
      if (last_rejected) fac = std::min(fac, 1.0);
      err_old = std::max(err, 1e-4);
      last_rejected = false;
      h *= fac;
      if (std::abs(h) > opt_.max_step) h = dir * opt_.max_step;
    }
  }

 private:
  void call(const State& x, State& dx) {
    f_(x, dx);
  }

  double initial_step(const State& y, double dir, double span) {
    const Tolerances& tol = opt_.tol;
    State sc = (tol.abs + tol.rel * y.cwiseAbs().array()).matrix();
    const double d0 = (y.cwiseQuotient(sc)).norm() / std::sqrt(dim_);
    const double d1n = (k1_.cwiseQuotient(sc)).norm() / std::sqrt(dim_);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, span);
    tmp_ = y + dir * h0 * k1_;
    call(tmp_, k2_);
    const double d2 = ((k2_ - k1_).cwiseQuotient(sc)).norm() / std::sqrt(dim_) / h0;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                  : std::pow(0.01 / dm, 1.0 / 5.0);
    double h = std::min({100.0 * h0, h1, span, opt_.max_step});
    return dir * h;
  }

  // One trial step from y with k1 = f(y); fills y1_, k2..k7 and returns the
  // scaled max-norm error estimate.
  double attempt(const State& y, double h) {
    tmp_ = y + h * a21 * k1_;
    call(tmp_, k2_);
    tmp_ = y + h * (a31 * k1_ + a32 * k2_);
    call(tmp_, k3_);
    tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    call(tmp_, k4_);
    tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    call(tmp_, k5_);
    tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    call(tmp_, k6_);
    y1_ = y + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
    call(y1_, k7_);
    err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double sc = opt_.tol.abs +
                        opt_.tol.rel * std::max(std::abs(y[i]), std::abs(y1_[i]));
      worst = std::max(worst, std::abs(err_[i]) / sc);
    }
    if (!y1_.allFinite()) return std::numeric_limits<double>::infinity();
    return worst;
  }

  // Illinois regula falsi on the step's interpolant.
  EventHit locate_event(const EventSpec& ev, const Eigen::MatrixXd& coeffs,
                        double t, double h, double g0, double g1) {
    double a = 0.0, b = 1.0, ga = g0, gb = g1;
    int side = 0;
    double theta = 1.0;
    State x = eval_dense(coeffs, theta);
    double gx = g1;
    // Iterate until both |g| <= event_tol and the bracket is tight in time;
    // |g| alone says little about t where g is flat.
    for (int it = 0; it < 200; ++it) {
      if (gb == ga) break;
      theta = (a * gb - b * ga) / (gb - ga);
      if (!(theta > a && theta < b)) theta = 0.5 * (a + b);
      x = eval_dense(coeffs, theta);
      gx = ev.fn(x);
      if (gx == 0.0) break;
      if (sign_of(gx) == sign_of(gb)) {
        b = theta;
        gb = gx;
        if (side == -1) ga *= 0.5;
        side = -1;
      } else {
        a = theta;
        ga = gx;
        if (side == 1) gb *= 0.5;
        side = 1;
      }
      if (b - a < 4.0 * std::numeric_limits<double>::epsilon()) break;
      if (std::abs(gx) <= opt_.event_tol && b - a <= 1e-12) break;
    }
    if (std::abs(g1) < std::abs(gx) && std::abs(g1) <= opt_.event_tol) {
      theta = 1.0;
      x = eval_dense(coeffs, theta);
    }
    return {0, t + theta * h, x};
  }

  void push_step(Trajectory& tr, double t, double h,
                 const Eigen::MatrixXd& coeffs, double t_end, const State& y_end) {
    if (opt_.dense) tr.segments_.push_back({t, h, coeffs});
    tr.times_.push_back(t_end);
    tr.states_.push_back(y_end);
  }

  const FieldFn& f_;
  const IntegrateOptions& opt_;
  int dim_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y1_, err_;
};

IntegrationResult integrate(const FieldFn& field, const State& x0, double t0,
                            double t1, const IntegrateOptions& options,
                            std::span<const EventSpec> events) {
  DormandPrince dp(field, static_cast<int>(x0.size()), options);
  return dp.run(x0, t0, t1, events);
}

IntegrationResult integrate(const FamilySpec& spec, const State& x0, double t0,
                            double t1, const IntegrateOptions& options,
                            std::span<const EventSpec> events) {
  if (x0.size() != spec.state_dim()) {
    throw std::invalid_argument("initial state dimension mismatch");
  }
  return integrate(spec.field(), x0, t0, t1, options, events);
}

UntilResult integrate_until(const FamilySpec& spec, const State& x0,
                            const EventSpec& event, double t_max,
                            const IntegrateOptions& options, double t0) {
  EventSpec ev = event;
  ev.terminal = true;
  UntilResult out;
  out.run = integrate(spec, x0, t0, t_max, options, std::span(&ev, 1));
  if (!out.run.events.empty()) out.hit = out.run.events.front();
  return out;
}

State poincare_map(const FamilySpec& spec, const EventSpec& section,
                   const State& x0, double t_max,
                   const IntegrateOptions& options, double* return_time) {
  IntegrateOptions opt = options;
  opt.fire_at_start = false;
  UntilResult r = integrate_until(spec, x0, section, t_max, opt);
  if (!r.hit) {
    throw NoReturnError("no return to section before t=" + std::to_string(t_max) +
                        " (" + std::string(status_name(r.run.status)) + ")");
  }
  if (return_time) *return_time = r.hit->t;
  return r.hit->state;
}

EventSpec linear_section(const Eigen::VectorXd& normal, double offset,
                         int direction) {
  return {[normal, offset](const State& x) { return normal.dot(x) - offset; },
          direction, true};
}

EventSpec coordinate_section(int index, double value, int direction) {
  return {[index, value](const State& x) { return x[index] - value; },
          direction, true};
}

}  // namespace bwp

// Acceptance suite: one PASS/FAIL line per criterion.  Exit status is the
// number of failed criteria.

#include "bwp/averaging.hpp"
#include "bwp/classify.hpp"
#include "bwp/connections.hpp"
#include "bwp/integrals.hpp"
#include "bwp/integrate.hpp"
#include "bwp/oscillators.hpp"
#include "bwp/systems.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

using namespace bwp;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !o.pass;
  std::printf("%s %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

IntegrateOptions tight(double rel = 1e-12, double abs = 1e-14) {
  IntegrateOptions o;
  o.tol.rel = rel;
  o.tol.abs = abs;
  return o;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// A state on a bounded level of the planar reduction: at the center with
// the kinetic energy of the level fraction.
State bounded_state(FamilyId f, double th, double fraction) {
  auto ps = planar_reduce(f, th);
  auto w = periodic_window(ps);
  const double h = w.h_center + fraction * (w.h_saddle - w.h_center);
  return ps.embed(w.y_center, std::sqrt(2 * (h - w.h_center)));
}

Outcome conservation() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> frac(0.05, 0.95), th24(0.1, 2.0), th25(-0.3, 0.3);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  const auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", 0}});
  const auto rev = make_family(FamilyId::RevTb25, {{"a", 0}, {"b", 0}});
  for (int k = 0; k < 20; ++k) {
    for (const FamilySpec* spec : {&tb, &rev}) {
      const double th = spec == &tb ? th24(rng) : th25(rng);
      const State x0 = bounded_state(spec->id(), th, frac(rng));
      const auto r = integrate(*spec, x0, 0.0, 100.0, tight());
      if (!r.ok()) return {false, "integration failed: " + r.message};
      const auto d = conservation_drift(r.trajectory, spec->id());
      worst = std::max({worst, d.theta, d.hamiltonian});
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 10.0,
          fmt("max drift %.3g (<= 1e-8) over 40 orbits, T=100, %.2f s (< 10 s)", worst, secs)};
}

Outcome boundaries() {
  const double hb = 2 * std::sqrt(2.0) / 3;
  double line = 0.0;
  for (double y : {1e-3, 0.1, 0.7, 1.0, 3.0, 25.0}) {
    for (double s : {1.0, -1.0}) {
      const State x = (State(3) << s * y, 0.0, 0.0).finished();
      line = std::max(line, std::abs(scaled_coords(FamilyId::Tb24, x).h_tilde + s * hb));
    }
  }
  // Homoclinic level from the numerically located saddle of the reduction
  // and along the numerically integrated homoclinic loop.
  double level = 0.0;
  const auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", 0}});
  for (double th : {0.1, 0.5, 2.0}) {
    auto w = periodic_window(planar_reduce(FamilyId::Tb24, th));
    level = std::max(level, std::abs(scaled_coords(th, w.h_saddle).h_tilde - hb));
    const State seed = tb24_saddle_seed(th, 1e-6);
    const double c = std::pow(2 * th, 0.25) / 2;
    const auto r = integrate(tb, seed, 0.0, 2 * std::log(12 * std::sqrt(2 * th) / 1e-6) / (2 * c),
                             tight());
    if (!r.ok()) return {false, "homoclinic integration failed"};
    for (const auto& x : r.trajectory.states()) {
      level = std::max(level, std::abs(scaled_coords(FamilyId::Tb24, x).h_tilde - hb));
    }
  }
  return {line <= 1e-12 && level <= 1e-8,
          fmt("equilibrium line %.3g (<= 1e-12), homoclinic level %.3g (<= 1e-8)", line, level)};
}

Outcome bifurcations() {
  double hopf = 0.0;
  for (double eps : {0.01, 0.1}) {
    for (double lambda : {0.5, 1.0, 2.0}) {
      auto pts = scan_manifold(make_family(FamilyId::Tb24, {{"eps", eps}, {"lambda", lambda}, {"b", 0}}),
                               -1.0, 3.0);
      int n = 0;
      for (const auto& p : pts) {
        if (p.kind != BifurcationKind::Hopf) continue;
        ++n;
        hopf = std::max(hopf, std::abs(p.y_star[0] - lambda));
      }
      if (n != 1) return {false, fmt("%d Hopf points for lambda=%g eps=%g", n, lambda, eps)};
    }
  }
  const double r3 = 1 / std::sqrt(3.0);
  double tb = 0.0;
  int n_tb = 0;
  for (auto [a, b] : {std::pair{0.2, 0.0}, {0.1, 0.3}, {-0.4, 0.5}}) {
    for (const auto& p : scan_manifold(make_family(FamilyId::RevTb25, {{"a", a}, {"b", b}}), -1.5, 1.5)) {
      if (p.kind != BifurcationKind::TakensBogdanov) continue;
      ++n_tb;
      tb = std::max(tb, std::abs(std::abs(p.y_star[0]) - r3));
    }
  }
  if (n_tb != 6) return {false, fmt("%d Takens-Bogdanov points, expected 6", n_tb)};
  auto z = scan_manifold(make_family(FamilyId::LineZero21, {}), -1.0, 2.0);
  if (z.size() != 1 || z[0].kind != BifurcationKind::TransverseZero) return {false, "line-zero scan"};
  const double zero = std::abs(z[0].y_star[0]);
  return {hopf <= 1e-8 && tb <= 1e-8 && zero <= 1e-8,
          fmt("Hopf |y*-lambda| %.3g, TB |y*|-1/sqrt3 %.3g, zero %.3g (all <= 1e-8)", hopf, tb, zero)};
}

Outcome type_concordance() {
  struct Regime {
    FamilyId id;
    Params p;
    double y_star;
  };
  const std::vector<Regime> regimes = {
      {FamilyId::Hopf23, {{"omega", 1}, {"sign", -1}}, 0.0},
      {FamilyId::Hopf23, {{"omega", 1}, {"sign", 1}}, 0.0},
      {FamilyId::Tb24, {{"eps", 0.05}, {"lambda", 1}, {"b", -1.2}}, 1.0},
      {FamilyId::Tb24, {{"eps", 0.05}, {"lambda", 1}, {"b", 0}}, 1.0},
      {FamilyId::RevTb25, {{"a", 0.1}, {"b", 0}}, 0.0},
      {FamilyId::RevTb25, {{"a", 0.1}, {"b", 0.3}}, 0.0},
  };
  int agree = 0;
  std::ostringstream os;
  for (const auto& r : regimes) {
    const auto expect = hopf_type(r.id, r.p);
    const auto got = dynamic_type_check(make_family(r.id, r.p), r.y_star).subtype;
    agree += expect == got && expect != HopfSubtype::Undetermined;
    os << ' ' << family_key(r.id) << ':' << subtype_name(expect) << '/' << subtype_name(got);
  }
  return {agree == 6, fmt("%d/6 agree;", agree) + os.str()};
}

// Change of (Theta, H) over one loop of the full tb-2.4 flow, started at the
// left turning point of the unperturbed level and stopped at its next
// upward crossing of y' = 0.
Outcome averaging_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const Params base{{"lambda", 1}, {"b", -1.2}};
  int good = 0, levels = 0;
  double worst_ratio = 1e300;
  for (double th : {0.3, 1.0}) {
    auto ps = planar_reduce(FamilyId::Tb24, th);
    auto w = periodic_window(ps);
    for (double f : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      ++levels;
      const double h = w.h_center + f * (w.h_saddle - w.h_center);
      Params p = base;
      p["eps"] = 0.0;
      const auto drift = averaged_drift(FamilyId::Tb24, p, th, h);
      const auto orb = periodic_orbit(ps, h);
      const State x0 = orb.orbit.front();
      std::vector<double> res;
      for (double eps : {1e-2, 5e-3, 2.5e-3}) {
        p["eps"] = eps;
        const auto spec = make_family(FamilyId::Tb24, p);
        auto opt = tight(1e-13, 1e-15);
        opt.fire_at_start = false;
        const auto u = integrate_until(spec, x0, coordinate_section(1, 0.0, +1), 3 * orb.period, opt);
        if (!u.hit) return {false, "no return to the section"};
        const auto i0 = integrals(FamilyId::Tb24, x0);
        const auto i1 = integrals(FamilyId::Tb24, u.hit->state);
        res.push_back(std::hypot(i1.theta - i0.theta - eps * drift.d_theta,
                                 i1.hamiltonian - i0.hamiltonian - eps * drift.d_h));
      }
      const double r = std::min(res[0] / res[1], res[1] / res[2]);
      worst_ratio = std::min(worst_ratio, r);
      good += r >= 3.5;
    }
  }
  const double secs = seconds_since(t0);
  return {good == levels && secs < 60.0,
          fmt("%d/%d levels, smallest residual ratio %.3f (>= 3.5), %.2f s (< 60 s)", good, levels,
              worst_ratio, secs)};
}

Outcome melnikov_anchor() {
  double dt = 0.0, dh = 0.0;
  for (auto [a, b] : {std::pair{0.1, 0.3}, {0.0, 0.0}, {0.5, -0.2}, {-0.3, 0.7}}) {
    const auto m = melnikov(FamilyId::RevTb25, {{"a", a}, {"b", b}}, 0.0);
    dt = std::max(dt, std::abs(m.m_theta - 2 * std::sqrt(2.0) / 3 * (b - a)));
    dh = std::max(dh, std::abs(m.m_h));
  }
  return {dt <= 1e-9 && dh <= 1e-10,
          fmt("|m_theta - (2 sqrt2/3)(b-a)| %.3g (<= 1e-9), |m_h| %.3g (<= 1e-10)", dt, dh)};
}

Outcome melnikov_zero_stability() {
  std::ostringstream os;
  bool ok = true;
  double shift = 0.0;
  {
    const Params p{{"eps", 0.1}, {"lambda", 1}, {"b", -1.2}};
    const auto a = melnikov_zeros(FamilyId::Tb24, p, 0.5, 10, 64);
    const auto b = melnikov_zeros(FamilyId::Tb24, p, 0.5, 10, 128);
    MelnikovOptions fine;
    fine.tolerance = 1e-15;
    fine.max_depth = 18;
    const auto c = melnikov_zeros(FamilyId::Tb24, p, 0.5, 10, 64, MelnikovScan::Split, fine);
    ok &= a.zeros.size() == 1 && b.zeros.size() == 1 && c.zeros.size() == 1;
    if (ok) {
      shift = std::max(std::abs(a.zeros[0].theta_value - b.zeros[0].theta_value),
                       std::abs(a.zeros[0].theta_value - c.zeros[0].theta_value));
      os << fmt("tb-2.4 zero %.8f", a.zeros[0].theta_value);
    }
  }
  for (auto [a, b] : {std::pair{0.1, 0.3}, {0.1, 0.0}}) {
    const Params p{{"a", a}, {"b", b}};
    const double lim = melnikov_theta_limit(FamilyId::RevTb25);
    const auto z1 = melnikov_zeros(FamilyId::RevTb25, p, -lim, lim, 64);
    const auto z2 = melnikov_zeros(FamilyId::RevTb25, p, -lim, lim, 128);
    ok &= z1.zeros.size() == z2.zeros.size();
    for (std::size_t i = 0; ok && i < z1.zeros.size(); ++i) {
      shift = std::max(shift, std::abs(z1.zeros[i].theta_value - z2.zeros[i].theta_value));
    }
    os << fmt(", rev-tb-2.5 (%g,%g): %zu/%zu zeros", a, b, z1.zeros.size(), z2.zeros.size());
  }
  ok &= shift <= 1e-8;
  return {ok, os.str() + fmt("; max shift %.3g (<= 1e-8)", shift)};
}

Outcome decoupling() {
  OctahedralGraph g(1);
  auto node = default_node(0.3, 0.5);
  auto net = build_network(g, {node});
  auto v2 = [](double a, double b) { return (Eigen::VectorXd(2) << a, b).finished(); };
  const State x0 = antipode_state(g, {v2(0.9, 0.2), v2(-0.4, 1.1)});
  const auto opt = tight(1e-11, 1e-13);
  const auto run = integrate(net, x0, 0.0, 100.0, opt);
  if (!run.ok()) return {false, "network integration failed"};
  double anti = 0.0;
  for (const auto& [t, x] : run.trajectory.sample(0.01)) anti = std::max(anti, antipode_residual(x, g, 2));
  const auto dec = decoupling_defect(net, g, {node}, x0, 50.0, opt);

  const auto base = base_orbit(node, v2(1, 0), opt);
  double fixed = 0.0;
  for (int k = 0; k < 16; ++k) {
    const auto orb = phase_torus_orbit(g, {base, base}, {0.0, 2 * kPi * k / 16});
    fixed = std::max(fixed, fixed_point_residual(net, orb, 2, opt));
  }
  return {anti <= 1e-9 && dec.defect <= 1e-7 && fixed <= 1e-6,
          fmt("antipode %.3g (<= 1e-9, T=100), defect %.3g (<= 1e-7, T=50), fixed point %.3g (<= 1e-6)",
              anti, dec.defect, fixed)};
}

Outcome reversibility() {
  auto R = [](const State& s) { return (State(3) << -s[0], s[1], -s[2]).finished(); };
  auto R2 = [](const State& s) { return (State(3) << s[0], -s[1], s[2]).finished(); };
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> U(-0.25, 0.25), T(0.5, 3.0), P(-1.0, 1.0);
  const auto opt = tight(1e-11, 1e-13);
  const double tol = 1e-7;  // accumulated integrator error over both runs
  auto defect = [&](const FamilySpec& spec, auto&& inv, const State& s0, double t) {
    const auto fwd = integrate(spec, inv(s0), 0.0, t, opt);
    const auto bwd = integrate(spec, s0, 0.0, -t, opt);
    if (!fwd.ok() || !bwd.ok()) return std::numeric_limits<double>::infinity();
    return (fwd.trajectory.back() - inv(bwd.trajectory.back())).norm();
  };
  double r_all = 0.0, r2_kolmogorov = 0.0, r2_broken = 1e300;
  for (int k = 0; k < 10; ++k) {
    const State s0 = (State(3) << U(rng), U(rng), U(rng)).finished();
    const double t = T(rng);
    const double a = P(rng), b = P(rng);
    r_all = std::max(r_all, defect(make_family(FamilyId::RevTb25, {{"a", a}, {"b", b}}), R, s0, t));
    r2_kolmogorov = std::max(r2_kolmogorov,
                             defect(make_family(FamilyId::RevTb25, {{"a", 0}, {"b", 0}}), R2, s0, t));
    r2_broken = std::min(r2_broken, defect(make_family(FamilyId::RevTb25, {{"a", a}, {"b", b}}), R2, s0, t));
  }
  return {r_all <= tol && r2_kolmogorov <= tol && r2_broken > 100 * tol,
          fmt("R defect %.3g (random a,b), R2 defect %.3g at a=b=0 (<= %g), R2 defect >= %.3g off a=b=0",
              r_all, r2_kolmogorov, tol, r2_broken)};
}

Outcome splitting() {
  const auto bent = make_family(FamilyId::Hopf23, {{"omega", 1}, {"sign", -1}, {"gamma", 0.1}});
  const auto d = splitting_decay(bent, 1.0, 3);
  std::ostringstream os;
  os << "gaps";
  for (const auto& m : d.measurements) os << fmt(" %.3g@r=%g", m.gap, m.r_scale);
  bool ok = d.r0 > 0.0 && d.resolved_below_r0;
  for (std::size_t i = 0; i < d.ratios.size(); ++i) {
    if (d.measurements[i].r_scale <= d.r0) ok &= d.ratios[i] < 1.0 / 16;
  }
  const double flat =
      splitting_distance(bent.with_params({{"gamma", 0.0}}), 0.5).gap;
  ok &= flat <= 1e-10;
  os << fmt("; r0 = %g; gap at gamma=0: %.3g (<= 1e-10)", d.r0, flat);
  return {ok, os.str()};
}

}  // namespace

int main() {
  report(1, "conservation", conservation);
  report(2, "chart boundaries", boundaries);
  report(3, "bifurcation locations", bifurcations);
  report(4, "Hopf type concordance", type_concordance);
  report(5, "averaging oracle", averaging_oracle);
  report(6, "Melnikov closed form", melnikov_anchor);
  report(7, "Melnikov zero stability", melnikov_zero_stability);
  report(8, "antipode decoupling", decoupling);
  report(9, "reversibility", reversibility);
  report(10, "splitting decay", splitting);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}

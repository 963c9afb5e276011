#include "bwp/integrals.hpp"
#include "bwp/integrate.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace bwp;

namespace {

State vec(std::initializer_list<double> v) {
  State s(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) s[i++] = x;
  return s;
}

const double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("equilibrium stays put") {
  auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", -1.2}});
  const auto r = integrate(tb, vec({0.5, 0, 0}), 0.0, 10.0);
  CHECK(r.status == IntegrationStatus::Completed);
  CHECK(r.trajectory.t_end() == 10.0);
  for (const auto& x : r.trajectory.states()) CHECK((x - vec({0.5, 0, 0})).norm() == 0.0);
}

TEST_CASE("reflect-2.2 elliptic orbits are circles") {
  auto spec = make_family(FamilyId::Reflect22, {{"sign", -1}});
  const auto r = integrate(spec, vec({1, 0}), 0.0, 20.0);
  REQUIRE(r.ok());
  double worst = 0.0;
  for (const auto& [t, x] : r.trajectory.sample(0.01)) {
    worst = std::max(worst, std::abs(x.squaredNorm() - 1.0));
  }
  CHECK(worst <= 1e-8);
}

TEST_CASE("line-zero-2.1 orbits are parabolas and escape") {
  auto spec = make_family(FamilyId::LineZero21, {});
  const auto r = integrate(spec, vec({1, 0}), 0.0, 10.0);
  CHECK(r.status == IntegrationStatus::BlowUp);
  CHECK(r.trajectory.t_end() < 3.0);
  double worst = 0.0;
  for (const auto& x : r.trajectory.states()) {
    if (x.norm() > 10.0) break;
    worst = std::max(worst, std::abs(x[0] - (x[1] * x[1] / 2 + 1)));
  }
  CHECK(worst <= 1e-7);
}

TEST_CASE("steps respect tolerances and times are monotone") {
  auto spec = make_family(FamilyId::RevTb25, {{"a", 0}, {"b", 0}});
  const auto fwd = integrate(spec, vec({0.2, 0.1, -0.1}), 0.0, 5.0);
  const auto bwd = integrate(spec, vec({0.2, 0.1, -0.1}), 0.0, -5.0);
  for (std::size_t i = 1; i < fwd.trajectory.size(); ++i) {
    CHECK(fwd.trajectory.times()[i] > fwd.trajectory.times()[i - 1]);
  }
  CHECK(bwd.trajectory.backward());
  for (std::size_t i = 1; i < bwd.trajectory.size(); ++i) {
    CHECK(bwd.trajectory.times()[i] < bwd.trajectory.times()[i - 1]);
  }
  CHECK(fwd.trajectory.tolerances.rel == 1e-9);
  CHECK(fwd.trajectory.accepted_steps > 0);
  CHECK_THROWS_AS(fwd.trajectory.at(6.0), std::out_of_range);
}

TEST_CASE("dense output against the closed-form homoclinic") {
  const double th = 0.5;
  auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", -1.2}});
  const State x0 = tb24_homoclinic(th, -4.0);
  IntegrateOptions o;
  o.tol.rel = 1e-12;
  o.tol.abs = 1e-14;
  const auto r = integrate(tb, x0, -4.0, 4.0, o);
  REQUIRE(r.ok());
  double worst = 0.0;
  for (double t = -4.0; t <= 4.0; t += 0.0137) {
    worst = std::max(worst, (r.trajectory.at(t) - tb24_homoclinic(th, t)).norm());
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("backward integration recovers the initial state") {
  auto spec = make_family(FamilyId::Tb24, {{"eps", 0.05}, {"lambda", 1}, {"b", -1.2}});
  // Theta ~ 0.5: a bounded orbit around the center y = 1.
  const State x0 = vec({1.1, 0.0, -0.105});
  IntegrateOptions o;
  const auto fwd = integrate(spec, x0, 0.0, 10.0, o);
  const auto back = integrate(spec, fwd.trajectory.back(), 10.0, 0.0, o);
  CHECK(back.trajectory.t_end() == 0.0);
  const double budget = 10.0 * o.tol.rel * static_cast<double>(fwd.trajectory.accepted_steps +
                                                                back.trajectory.accepted_steps);
  CHECK((back.trajectory.back() - x0).norm() <= budget);
}

TEST_CASE("rev-tb-2.5 flow conjugacy under R") {
  auto R = [](const State& s) { return vec({-s[0], s[1], -s[2]}); };
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-0.25, 0.25), T(0.5, 3.0);
  for (auto [a, b] : {std::pair{0.0, 0.0}, {0.2, 0.3}}) {
    auto spec = make_family(FamilyId::RevTb25, {{"a", a}, {"b", b}});
    for (int k = 0; k < 5; ++k) {
      const State s0 = vec({U(rng), U(rng), U(rng)});
      const double t = T(rng);
      const auto lhs = integrate(spec, R(s0), 0.0, t);
      const auto rhs = integrate(spec, s0, 0.0, -t);
      REQUIRE(lhs.ok());
      REQUIRE(rhs.ok());
      CHECK((lhs.trajectory.back() - R(rhs.trajectory.back())).norm() <= 1e-7);
    }
  }
}

TEST_CASE("conservation error shrinks with the tolerance") {
  auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", -1.2}});
  const State x0 = vec({1.1, 0.1, -0.1});
  double prev = 0.0;
  for (double rel : {1e-6, 1e-8, 1e-10}) {
    IntegrateOptions o;
    o.tol.rel = rel;
    o.tol.abs = rel * 1e-3;
    const auto r = integrate(tb, x0, 0.0, 50.0, o);
    const auto d = conservation_drift(r.trajectory, FamilyId::Tb24);
    const double err = std::max(d.theta, d.hamiltonian);
    if (prev > 0.0) CHECK(err < 0.1 * prev);
    prev = err;
  }
  CHECK(prev < 1e-8);
}

TEST_CASE("hopf-2.3 return time is 2 pi / omega") {
  const double omega = 1.7;
  auto hopf = make_family(FamilyId::Hopf23, {{"omega", omega}, {"sign", -1}});
  const State x0 = hopf_from_polar(0.5, 0.0, -1.0);
  const auto u = integrate_until(hopf, x0, coordinate_section(1, 0.0, +1), 20.0);
  REQUIRE(u.hit);
  CHECK(u.hit->t == doctest::Approx(2 * kPi / omega).epsilon(1e-9));
  CHECK(std::abs(u.hit->state[1]) <= 1e-10);
}

TEST_CASE("event at the initial state fires immediately") {
  auto spec = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", 0}});
  const auto u = integrate_until(spec, vec({0.2, 0.0, 0.3}), coordinate_section(1, 0.0, 0), 10.0,
                                 {}, 1.5);
  REQUIRE(u.hit);
  CHECK(u.hit->t == 1.5);
}

TEST_CASE("no event before t_max is not a failure") {
  auto spec = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", 0}});
  const auto u = integrate_until(spec, vec({0.5, 0, 0}), coordinate_section(1, 1.0, 0), 5.0);
  CHECK_FALSE(u.hit);
  CHECK(u.run.status == IntegrationStatus::Completed);
  CHECK_THROWS_AS(poincare_map(spec, coordinate_section(1, 1.0, 0), vec({0.5, 0, 0}), 5.0),
                  NoReturnError);
}

TEST_CASE("planar period from events matches the closed-form period near the center") {
  // Small oscillations of y'' = Theta - y^2/2 about y = sqrt(2 Theta) have
  // frequency (2 Theta)^(1/4).
  const double th = 0.5;
  auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", 0}});
  const PlanarSystem ps(FamilyId::Tb24, th);
  const double yc = std::sqrt(2 * th), amp = 1e-4;
  IntegrateOptions o;
  o.tol.rel = 1e-12;
  o.tol.abs = 1e-15;
  double t_ret = 0.0;
  poincare_map(tb, coordinate_section(1, 0.0, +1), ps.embed(yc - amp, 0.0), 50.0, o, &t_ret);
  CHECK(t_ret == doctest::Approx(2 * kPi / std::pow(2 * th, 0.25)).epsilon(1e-6));
}

TEST_CASE("hopf return map equals the time-2pi map of the (r, y) system") {
  const double omega = 1.0;
  auto hopf = make_family(FamilyId::Hopf23, {{"omega", omega}, {"sign", -1}});
  IntegrateOptions o;
  o.tol.rel = 1e-12;
  o.tol.abs = 1e-14;
  const State x0 = hopf_from_polar(0.3, 0.0, 0.2);
  const State p = poincare_map(hopf, coordinate_section(1, 0.0, +1), x0, 50.0, o);
  FieldFn planar = [](const State& s, State& ds) {
    ds[0] = s[0] * s[1];
    ds[1] = -s[0] * s[0];
  };
  const auto q = integrate(planar, vec({0.3, 0.2}), 0.0, 2 * kPi / omega, o);
  CHECK(std::hypot(p[0], p[1]) == doctest::Approx(q.trajectory.back()[0]).epsilon(1e-9));
  CHECK(p[2] == doctest::Approx(q.trajectory.back()[1]).epsilon(1e-9));
}

TEST_CASE("near-equilibrium stop ends heteroclinic flights") {
  auto hopf = make_family(FamilyId::Hopf23, {{"omega", 1}, {"sign", -1}});
  IntegrateOptions o;
  o.near_equilibrium_eta = 1e-9;
  const auto r = integrate(hopf, hopf_from_polar(1e-6, 0.0, 0.5), 0.0, 500.0, o);
  CHECK(r.status == IntegrationStatus::NearEquilibrium);
  CHECK(r.trajectory.back()[2] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(hopf.eval(r.trajectory.back()).norm() <= 1e-9);
}

TEST_CASE("non-finite initial data is reported") {
  auto spec = make_family(FamilyId::LineZero21, {});
  const auto r = integrate(spec, vec({std::nan(""), 0}), 0.0, 1.0);
  CHECK(r.status == IntegrationStatus::NonFinite);
  CHECK_FALSE(r.ok());
}

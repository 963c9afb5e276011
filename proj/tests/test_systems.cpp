#include "bwp/systems.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace bwp;

namespace {

State vec(std::initializer_list<double> v) {
  State s(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) s[i++] = x;
  return s;
}

std::vector<FamilySpec> presets() {
  return {make_family(FamilyId::LineZero21, {}),
          make_family(FamilyId::Reflect22, {{"sign", 1}}),
          make_family(FamilyId::Reflect22, {{"sign", -1}}),
          make_family(FamilyId::Hopf23, {{"omega", 1.3}, {"sign", -1}, {"gamma", 0.1}}),
          make_family(FamilyId::Tb24, {{"eps", 0.1}, {"lambda", 1}, {"b", -1.2}}),
          make_family(FamilyId::RevTb25, {{"a", 0.1}, {"b", 0.2}}),
          make_family(FamilyId::OscNetwork, {{"m", 1}}),
          make_family(FamilyId::ViscousProfile, {{"s", 0.3}})};
}

}  // namespace

TEST_CASE("preset fields match the normal forms") {
  auto tb = make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", -1.2}});
  CHECK(tb.state_dim() == 3);
  CHECK((tb.eval(vec({1, 1, 0})) - vec({1, 0, -1})).norm() == 0.0);
  // eps = 0: y''' = -y y'
  const State s = vec({0.7, -0.3, 1.1});
  CHECK(tb.eval(s)[2] == doctest::Approx(-0.7 * -0.3));

  auto lz = make_family("line-zero-2.1", {});
  CHECK((lz.eval(vec({1, 2})) - vec({2, 1})).norm() == 0.0);

  auto kolmogorov = make_family(FamilyId::RevTb25, {{"a", 0}, {"b", 0}});
  const State k = vec({0.4, 0.5, -0.2});
  CHECK(kolmogorov.eval(k)[2] == doctest::Approx(-(1 - 3 * 0.16) * 0.5));

  auto rev = make_family(FamilyId::RevTb25, {{"a", 0.1}, {"b", 0.2}});
  const State r = rev.eval(vec({0.5, 1, 2}));
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.0);
  CHECK(r[2] == doctest::Approx(0.05).epsilon(1e-14));

  auto hopf = make_family(FamilyId::Hopf23, {{"omega", 2}, {"sign", 1}});
  CHECK(hopf.param("gamma") == 0.0);
  const State h = hopf.eval(vec({0.3, -0.4, 0.5}));
  CHECK(h[0] == doctest::Approx(0.3 * 0.5 + 2 * 0.4));
  CHECK(h[1] == doctest::Approx(2 * 0.3 - 0.4 * 0.5));
  CHECK(h[2] == doctest::Approx(0.25));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(make_family("no-such-family", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(make_family(FamilyId::Tb24, {{"eps", 0}, {"lambda", 1}, {"b", 0}, {"c", 1}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_family(FamilyId::Tb24, {{"eps", -0.1}, {"lambda", 1}, {"b", 0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_family(FamilyId::Reflect22, {{"sign", 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(make_family(FamilyId::LineZero21, {}).eval(vec({1, 2, 3})),
                  std::invalid_argument);
  for (FamilyId id : all_families()) CHECK(parse_family(family_key(id)) == id);
}

TEST_CASE("state dimensions") {
  CHECK(make_family(FamilyId::LineZero21, {}).state_dim() == 2);
  CHECK(make_family(FamilyId::Hopf23, {{"omega", 1}, {"sign", 1}}).state_dim() == 3);
  // 2 (m + 1) vertices with planar nodes
  CHECK(make_family(FamilyId::OscNetwork, {{"m", 1}}).state_dim() == 8);
  CHECK(make_family(FamilyId::OscNetwork, {{"m", 2}}).state_dim() == 12);
  CHECK(make_family(FamilyId::ViscousProfile, {{"s", 0}}).state_dim() == 6);
}

TEST_CASE("equilibrium manifold residuals vanish") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-5, 5);
  for (const auto& spec : presets()) {
    if (spec.manifold_dim() == 0) continue;
    for (int k = 0; k < 100; ++k) {
      std::vector<double> y(spec.manifold_dim());
      for (auto& v : y) v = U(rng);
      CHECK(equilibrium_residual(spec, y) <= 1e-14);
    }
  }
  auto tb = make_family(FamilyId::Tb24, {{"eps", 0.3}, {"lambda", -2}, {"b", 4}});
  CHECK(equilibrium_residual(tb, 3.7) == 0.0);
  auto rev = make_family(FamilyId::RevTb25, {{"a", 1}, {"b", 2}});
  CHECK(equilibrium_residual(rev, -0.2) == 0.0);
  auto vp = make_family(FamilyId::ViscousProfile, {{"s", 0.7}});
  for (double c : {-3.0, 0.0, 0.4, 12.0}) CHECK(equilibrium_residual(vp, c) == 0.0);
}

TEST_CASE("closed-form jacobians") {
  auto lz = make_family(FamilyId::LineZero21, {});
  Matrix expect(2, 2);
  expect << 0.8, 0, 1, 0;
  CHECK((lz.jacobian(vec({0, 0.8})) - expect).norm() == 0.0);

  // Characteristic polynomial mu (mu^2 - eps (lambda - y) mu + y) on the line.
  const double eps = 0.1, lambda = 1.0, y = 0.4;
  auto tb = make_family(FamilyId::Tb24, {{"eps", eps}, {"lambda", lambda}, {"b", -1.2}});
  Eigen::EigenSolver<Matrix> es(tb.jacobian(vec({y, 0, 0})));
  for (int i = 0; i < 3; ++i) {
    const std::complex<double> mu = es.eigenvalues()[i];
    CHECK(std::abs(mu * (mu * mu - eps * (lambda - y) * mu + y)) < 1e-12);
  }

  auto rev = make_family(FamilyId::RevTb25, {{"a", 0.1}, {"b", 0}});
  Eigen::EigenSolver<Matrix> er(rev.jacobian(vec({0, 0, 0})));
  int imag_pairs = 0;
  for (int i = 0; i < 3; ++i) {
    const auto mu = er.eigenvalues()[i];
    if (std::abs(std::abs(mu.imag()) - 1.0) < 1e-12 && std::abs(mu.real()) < 1e-12) ++imag_pairs;
  }
  CHECK(imag_pairs == 2);
}

TEST_CASE("analytic and finite-difference jacobians agree") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-2, 2);
  for (const auto& spec : presets()) {
    for (int k = 0; k < 20; ++k) {
      State x(spec.state_dim());
      for (int i = 0; i < x.size(); ++i) x[i] = U(rng);
      const Matrix a = spec.jacobian(x), f = spec.jacobian_fd(x);
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      CHECK((a - f).cwiseAbs().maxCoeff() <= 1e-6 * scale);
    }
  }
}

TEST_CASE("rev-tb-2.5 reversibility") {
  auto R = [](const State& s) { return vec({-s[0], s[1], -s[2]}); };
  auto R2 = [](const State& s) { return vec({s[0], -s[1], s[2]}); };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (auto [a, b] : {std::pair{0.0, 0.0}, {0.3, -0.7}, {0.2, 0.0}, {0.0, 0.5}}) {
    auto spec = make_family(FamilyId::RevTb25, {{"a", a}, {"b", b}});
    double worst_r = 0.0, worst_r2 = 0.0;
    for (int k = 0; k < 50; ++k) {
      const State s = vec({U(rng), U(rng), U(rng)});
      worst_r = std::max(worst_r, (spec.eval(R(s)) + R(spec.eval(s))).norm());
      worst_r2 = std::max(worst_r2, (spec.eval(R2(s)) + R2(spec.eval(s))).norm());
    }
    CHECK(worst_r <= 1e-13);
    if (a == 0.0 && b == 0.0) {
      CHECK(worst_r2 <= 1e-13);
    } else {
      CHECK(worst_r2 > 1e-3);
    }
  }
}

TEST_CASE("reflect-2.2 reflection symmetry of the Euler-divided field") {
  for (double sign : {1.0, -1.0}) {
    auto spec = make_family(FamilyId::Reflect22, {{"sign", sign}});
    auto divided = [&](double x, double y) {
      const State f = spec.eval(vec({x, y}));
      return vec({f[0] / x, f[1] / x});
    };
    for (auto [x, y] : {std::pair{0.3, 0.9}, {-1.2, 0.4}, {2.0, -1.5}}) {
      // -S g(S z) with S(x, y) = (x, -y)
      const State g = divided(x, -y);
      const State conj = vec({-g[0], g[1]});
      CHECK((conj - divided(x, y)).norm() <= 1e-15);
    }
  }
}

TEST_CASE("manifold coordinates and reversal") {
  auto hopf = make_family(FamilyId::Hopf23, {{"omega", 1}, {"sign", -1}});
  CHECK(hopf.manifold_axes() == std::vector<int>{2});
  CHECK(hopf.transverse_axes() == std::vector<int>{0, 1});
  const State x = vec({0.3, 0.4, -0.2});
  CHECK(hopf.transverse_distance(x) == doctest::Approx(0.5));
  CHECK(hopf.manifold_coords(x)[0] == -0.2);
  CHECK((hopf.time_reversed().eval(x) + hopf.eval(x)).norm() == 0.0);
  CHECK((hopf.time_reversed().jacobian(x) + hopf.jacobian(x)).norm() == 0.0);
  const auto p = hopf_to_polar(x);
  CHECK((hopf_from_polar(p[0], p[1], p[2]) - x).norm() < 1e-15);

  auto moved = hopf.with_params({{"omega", 2}});
  CHECK(moved.param("omega") == 2.0);
  CHECK(moved.param("sign") == -1.0);
}

#include "bwp/integrals.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace bwp {

namespace {

void require_integrable_family(FamilyId f) {
  if (f != FamilyId::Tb24 && f != FamilyId::RevTb25) {
    throw std::invalid_argument("first integrals are only defined for " +
                                std::string(family_key(FamilyId::Tb24)) +
                                " and " +
                                std::string(family_key(FamilyId::RevTb25)));
  }
}

void require_dim3(const State& s) {
  if (s.size() != 3) throw std::invalid_argument("expected state (y, y', y'')");
}

}  // namespace

double theta(FamilyId family, const State& s) {
  require_integrable_family(family);
  require_dim3(s);
  const double y = s[0];
  if (family == FamilyId::Tb24) return s[2] + 0.5 * y * y;
  return s[2] + y - y * y * y;
}

double hamiltonian(FamilyId family, const State& s) {
  require_integrable_family(family);
  require_dim3(s);
  const double y = s[0], yd = s[1], ydd = s[2];
  if (family == FamilyId::Tb24) {
    return 0.5 * yd * yd - y * ydd - y * y * y / 3.0;
  }
  const double y2 = y * y;
  return -ydd * y + 0.5 * yd * yd + 0.75 * y2 * y2 - 0.5 * y2;
}

IntegralPair integrals(FamilyId family, const State& s) {
  return {theta(family, s), hamiltonian(family, s)};
}

ScaledCoords scaled_coords(double th, double h) {
  if (!(th > 0.0)) throw OutOfChart(th);
  // th^-1.5 applied in two halves so tiny Theta with tiny H stays finite.
  const double half = std::pow(th, -0.75);
  return {std::log(th), h * half * half};
}

ScaledCoords scaled_coords(FamilyId family, const State& s) {
  return scaled_coords(theta(family, s), hamiltonian(family, s));
}

double h_tilde_bound() { return 2.0 * std::sqrt(2.0) / 3.0; }

ConservationDrift conservation_drift(const Trajectory& tr, FamilyId family,
                                     double dt) {
  ConservationDrift d;
  if (tr.empty()) return d;
  const IntegralPair ref = integrals(family, tr.front());
  auto update = [&](const State& x) {
    const IntegralPair v = integrals(family, x);
    d.theta = std::max(d.theta, std::abs(v.theta - ref.theta));
    d.hamiltonian = std::max(d.hamiltonian, std::abs(v.hamiltonian - ref.hamiltonian));
  };
  if (tr.has_dense() && tr.size() > 1) {
    for (const auto& [t, x] : tr.sample(dt)) update(x);
  }
  for (const auto& x : tr.states()) update(x);
  return d;
}

PlanarSystem::PlanarSystem(FamilyId family, double theta_value)
    : family_(family), theta_(theta_value) {
  require_integrable_family(family);
  if (!std::isfinite(theta_value)) throw std::invalid_argument("Theta must be finite");
}

double PlanarSystem::potential(double y) const {
  if (family_ == FamilyId::Tb24) return -theta_ * y + y * y * y / 6.0;
  const double y2 = y * y;
  return -theta_ * y + 0.5 * y2 - 0.25 * y2 * y2;
}

double PlanarSystem::force(double y) const {
  if (family_ == FamilyId::Tb24) return theta_ - 0.5 * y * y;
  return theta_ - y + y * y * y;
}

double PlanarSystem::curvature(double y) const {
  if (family_ == FamilyId::Tb24) return y;
  return 1.0 - 3.0 * y * y;
}

std::vector<double> PlanarSystem::equilibria() const {
  std::vector<double> out;
  if (family_ == FamilyId::Tb24) {
    if (theta_ > 0.0) {
      const double s = std::sqrt(2.0 * theta_);
      out = {-s, s};
    } else if (theta_ == 0.0) {
      out = {0.0};
    }
    return out;
  }
  // y^3 - y + Theta = 0
  Eigen::Matrix3d companion;
  companion << 0.0, 1.0, -theta_,
               1.0, 0.0, 0.0,
               0.0, 1.0, 0.0;
  const Eigen::Vector3cd roots = companion.eigenvalues();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(roots[i].imag()) < 1e-9) {
      // Polish on the real cubic.
      double y = roots[i].real();
      for (int k = 0; k < 3; ++k) {
        const double g = y * y * y - y + theta_, dg = 3 * y * y - 1;
        if (dg == 0.0) break;
        y -= g / dg;
      }
      out.push_back(y);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

State PlanarSystem::embed(double y, double p) const {
  State s(3);
  s << y, p, force(y);
  return s;
}

FieldFn PlanarSystem::field() const {
  const PlanarSystem self = *this;
  return [self](const State& x, State& dx) {
    dx[0] = x[1];
    dx[1] = self.force(x[0]);
  };
}

PlanarSystem planar_reduce(FamilyId family, double theta_value) {
  return PlanarSystem(family, theta_value);
}

State tb24_homoclinic(double theta_value, double t) {
  if (!(theta_value > 0.0)) throw OutOfChart(theta_value);
  const double s = std::sqrt(2.0 * theta_value);
  const double c = 0.5 * std::sqrt(s);
  const double u = std::tanh(c * t);
  const double w = 1.0 - u * u;  // sech^2
  State x(3);
  x << s * (2.0 - 3.0 * u * u), -6.0 * s * c * u * w,
      1.5 * s * s * (3.0 * u * u - 1.0) * w;
  return x;
}

State revtb25_heteroclinic(double t) {
  const double k = 1.0 / std::sqrt(2.0);
  const double u = std::tanh(k * t);
  const double w = 1.0 - u * u;
  State x(3);
  x << u, k * w, -u * w;
  return x;
}

}  // namespace bwp

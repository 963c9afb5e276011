#pragma once

// First integrals of the integrable cases of the two third-order families,
// the (tau, H~) chart, and the one-degree-of-freedom reduction at fixed Theta.
//
//   tb-2.4:     Theta = y'' + y^2/2,     H = y'^2/2 - y y'' - y^3/3
//   rev-tb-2.5: Theta = y'' + y - y^3,   H = -y'' y + y'^2/2 + 3y^4/4 - y^2/2
//
// At fixed Theta the flow is y'' = -V'(y) and H = p^2/2 + V(y).

#include "bwp/integrate.hpp"
#include "bwp/systems.hpp"

#include <stdexcept>
#include <vector>

namespace bwp {

struct IntegralPair {
  double theta = 0.0;
  double hamiltonian = 0.0;
};

/// Throws std::invalid_argument unless family is Tb24 or RevTb25.
double theta(FamilyId family, const State& s);
double hamiltonian(FamilyId family, const State& s);
IntegralPair integrals(FamilyId family, const State& s);

struct ScaledCoords {
  double tau = 0.0;
  double h_tilde = 0.0;
};

class OutOfChart : public std::domain_error {
 public:
  explicit OutOfChart(double theta)
      : std::domain_error("Theta <= 0 lies outside the (tau, H~) chart"),
        theta(theta) {}
  double theta;
};

/// tau = log Theta, H~ = H exp(-1.5 tau).  Throws OutOfChart for Theta <= 0.
ScaledCoords scaled_coords(FamilyId family, const State& s);
ScaledCoords scaled_coords(double theta, double h);

/// +-(2/3) sqrt 2: H~ of the saddles (top) and foci (bottom) of tb-2.4.
double h_tilde_bound();

struct ConservationDrift {
  double theta = 0.0;
  double hamiltonian = 0.0;
};

/// Max deviation of Theta and H from their initial values, on dense samples
/// every `dt` (plus the final state).
ConservationDrift conservation_drift(const Trajectory& tr, FamilyId family,
                                     double dt = 0.01);

/// Planar Hamiltonian y' = p, p' = -V'(y) at a fixed Theta.
class PlanarSystem {
 public:
  PlanarSystem(FamilyId family, double theta_value);

  FamilyId family() const { return family_; }
  double theta_value() const { return theta_; }
  double potential(double y) const;
  /// -V'(y), which is also y'' on the level.
  double force(double y) const;
  double curvature(double y) const;  // V''(y)
  double energy(double y, double p) const { return 0.5 * p * p + potential(y); }

  /// Critical points of V in increasing order.
  std::vector<double> equilibria() const;
  bool is_center(double y) const { return curvature(y) > 0.0; }

  /// (y, p) -> (y, y', y'') of the third-order family on this level.
  State embed(double y, double p) const;
  FieldFn field() const;

 private:
  FamilyId family_;
  double theta_;
};

PlanarSystem planar_reduce(FamilyId family, double theta_value);

/// Closed-form homoclinic of tb-2.4 at Theta > 0 to the saddle
/// y = -sqrt(2 Theta):  y(t) = s (3 sech^2(c t) - 1), s = sqrt(2 Theta),
/// c = sqrt(s)/2.  Returns (y, y', y'').
State tb24_homoclinic(double theta_value, double t);
/// Heteroclinic y = tanh(t / sqrt 2) of rev-tb-2.5 at Theta = 0.
State revtb25_heteroclinic(double t);

}  // namespace bwp

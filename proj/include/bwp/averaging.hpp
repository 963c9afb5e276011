#pragma once

// Slow drift of the first integrals (Theta, H) under the perturbing terms:
// averages over unperturbed periodic orbits and Melnikov integrals along
// homoclinic / heteroclinic orbits.
//
// With I the perturbation of y''' (per unit eps for tb-2.4),
//   dTheta/dt = I,   dH/dt = -y I.

#include "bwp/integrals.hpp"
#include "bwp/systems.hpp"

#include <stdexcept>
#include <vector>

namespace bwp {

/// Perturbing term: (lambda - y) y'' + b y'^2 for tb-2.4, a y y'' + b y'^2
/// for rev-tb-2.5.  Reads lambda/b resp. a/b from params.
double drift_integrand(FamilyId family, const Params& params, const State& s);

/// Periodic region of the planar system at fixed Theta: center and the
/// saddle bounding the well (the lower one for rev-tb-2.5).
struct PeriodicWindow {
  double y_center = 0.0, h_center = 0.0;
  double y_saddle = 0.0, h_saddle = 0.0;
};

/// Throws std::domain_error when the level has no well (Theta <= 0 for
/// tb-2.4, |Theta| >= 2 sqrt(3)/9 for rev-tb-2.5).
PeriodicWindow periodic_window(const PlanarSystem& planar);

class LevelOutOfWindow : public std::domain_error {
 public:
  enum class Side { CenterSide, HomoclinicSide };
  LevelOutOfWindow(Side side, const std::string& what)
      : std::domain_error(what), side(side) {}
  Side side;
};

struct PeriodicOrbit {
  FamilyId family = FamilyId::Tb24;
  double theta_value = 0.0, h_value = 0.0;
  double y_min = 0.0, y_max = 0.0;
  /// 2 int dy / sqrt(2 (h - V)), by Gauss-Kronrod after y = c + A sin(phi).
  double period = 0.0;
  /// Return time to y' = 0 (upward) of the integrated orbit.
  double return_period = 0.0;
  /// One period of (y, y', y'') starting at the left turning point.
  Trajectory orbit;
};

/// Orbit integration defaults to rel 1e-12, abs 1e-14.
IntegrateOptions orbit_tolerances();

PeriodicOrbit periodic_orbit(const PlanarSystem& planar, double h_value,
                             const IntegrateOptions& options = orbit_tolerances());
/// Quadrature period alone (no integration).
double quadrature_period(const PlanarSystem& planar, double h_value);

struct DriftSample {
  double theta_value = 0.0, h_value = 0.0;
  double d_theta = 0.0, d_h = 0.0;  // per unperturbed period
  double period = 0.0;
  /// Difference between the trapezoid sums on N and N/2 samples.
  double error_estimate = 0.0;
  int samples = 0;
};

/// Drift per period over the periodic orbit of level (Theta, H), by the
/// trapezoid rule on the sampled orbit, doubling N until converged.  The
/// center level itself returns zero drift.
DriftSample averaged_drift(FamilyId family, const Params& params,
                           double theta_value, double h_value,
                           const IntegrateOptions& options = orbit_tolerances());

/// Direction of the rev-tb-2.5 heteroclinic at Theta = 0: Increasing is
/// y: -1 -> +1, Decreasing its mirror +1 -> -1.  Homoclinic loops (and
/// tb-2.4) are unaffected.
enum class Orientation { Increasing, Decreasing };

struct MelnikovOptions {
  /// Truncation time; 0 picks T* with the orbit 1e-12 from the saddle.
  /// Only used by the closed-form (tanh-substituted) orbits.
  double t_star = 0.0;
  double tolerance = 1e-13;
  int max_depth = 14;
  Orientation orientation = Orientation::Increasing;
};

struct MelnikovResult {
  double theta_value = 0.0;
  double m_theta = 0.0;  // int I dt
  double m_h = 0.0;      // -int y I dt
  /// The equilibrium the orbit converges to as t -> +inf.
  double target_y = 0.0;
  /// m_h + target_y m_theta: first-order displacement of the orbit's end
  /// off the curve of equilibria in the (Theta, H) plane.
  double m_split = 0.0;
  double error_estimate = 0.0;
  double t_star = 0.0;  // 0 when the orbit was integrated over y
};

/// Throws std::domain_error for Theta outside the homoclinic range.
MelnikovResult melnikov(FamilyId family, const Params& params,
                        double theta_value, const MelnikovOptions& opt = {});

enum class MelnikovScan { Split, Theta };

struct MelnikovZero {
  double theta_value = 0.0;
  double slope = 0.0;
  bool simple = false;
};

struct MelnikovZeroReport {
  std::vector<MelnikovZero> zeros;
  /// Sign changes that did not shrink under bisection (jumps).
  std::vector<double> discontinuities;
  int sign_changes = 0;
  bool unique = false;
  double theta_lo = 0.0, theta_hi = 0.0;  // after clipping to the valid range
  std::vector<std::pair<double, MelnikovResult>> samples;
};

/// Sign-change scan of m_split (default) or m_theta over n points of
/// [lo, hi] (log-spaced when lo > 0), refined by bisection to 1e-10.
/// The range is clipped to the family's homoclinic range.
MelnikovZeroReport melnikov_zeros(FamilyId family, const Params& params,
                                  double lo, double hi, int n,
                                  MelnikovScan mode = MelnikovScan::Split,
                                  const MelnikovOptions& opt = {});

/// Largest |Theta| with a homoclinic / heteroclinic (infinity for tb-2.4).
double melnikov_theta_limit(FamilyId family);

}  // namespace bwp

#pragma once

// Strong unstable / stable manifolds of equilibria on the line, shooting for
// heteroclinic connections, and separatrix splitting at elliptic Hopf points.

#include "bwp/classify.hpp"
#include "bwp/integrate.hpp"
#include "bwp/systems.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace bwp {

enum class ManifoldDirection { Unstable, Stable };

class NoSeedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ManifoldSeeds {
  std::vector<State> seeds;
  Complex eigenvalue;  // leading eigenvalue of the requested stability
  bool ring = false;   // complex pair: seeds over the rotation phase
};

/// Seeds at distance delta from the equilibrium y_eq along the leading
/// transverse eigenvector of the requested stability: +-v for a real
/// eigenvalue, a ring of n_ring points Re(e^{i theta} v) for a complex pair.
/// Throws NoSeedError when no such eigenvalue exists or the leading one is
/// not simple.
ManifoldSeeds manifold_seed(const FamilySpec& spec, double y_eq,
                            ManifoldDirection direction, double delta,
                            int n_ring = 8);

/// Point of the tb-2.4 homoclinic at Theta (closed form) a distance ~delta
/// from the saddle y = -sqrt(2 Theta): on the unstable branch (t < 0) or the
/// stable one (t > 0).
State tb24_saddle_seed(double theta_value, double delta, bool unstable = true);

struct Connection {
  double source_y = 0.0, target_y = 0.0;
  double flight_time = 0.0;
  /// Transverse distance of the closest approach to the line after leaving
  /// the source.
  double closest_residual = std::numeric_limits<double>::infinity();
  bool homoclinic = false;
  /// Found on the stable manifold of the source, traced backward in time.
  /// The orbit is then stored in reversed time: orbit.at(s) = x(-s).
  bool backward = false;
  int seed_index = -1;
  IntegrationStatus status = IntegrationStatus::Completed;
  Trajectory orbit;
};

struct HeteroclinicOptions {
  double delta = 1e-6;
  double t_max = 500.0;
  double accept_tol = 1e-6;
  bool backward = false;
  int n_ring = 8;
  double eta = 1e-9;
  /// Closest approaches count only after the transverse distance has
  /// exceeded this once (spirals out of a weak focus dip back near the
  /// source for a long time).
  double exit_distance = 1e-3;
  IntegrateOptions integrate;
};

class NoConnectionError : public std::runtime_error {
 public:
  NoConnectionError(const std::string& what, Connection best)
      : std::runtime_error(what), best(std::move(best)) {}
  Connection best;  // smallest residual found (may be infinite)
};

/// Shoots every seed and returns the shot with the smallest residual.
std::vector<Connection> shoot_seeds(const FamilySpec& spec, double source_y,
                                    const HeteroclinicOptions& opt = {});

/// Best seed shot with residual <= accept_tol.  Throws NoConnectionError
/// carrying the best attempt otherwise.
Connection find_heteroclinic(const FamilySpec& spec, double source_y,
                             const HeteroclinicOptions& opt = {});

/// Distinct accepted connections (targets separated by more than
/// `distinct_tol`) found from all sources of a grid.  Descriptive only.
struct SwarmCount {
  int connections = 0;
  std::vector<std::pair<double, double>> pairs;  // (source, target)
};
SwarmCount count_connections(const FamilySpec& spec,
                             const std::vector<double>& sources,
                             const HeteroclinicOptions& opt = {},
                             double distinct_tol = 1e-4);

struct SplittingOptions {
  int n_seeds = 64;
  int n_phase = 128;
  double delta = 1e-7;
  double t_max = 5000.0;
  double section_y = 0.0;
  IntegrateOptions integrate = [] {
    IntegrateOptions o;
    o.tol.rel = 1e-12;
    o.tol.abs = 1e-15;
    return o;
  }();
};

struct SplittingMeasurement {
  double r_scale = 0.0;
  /// max over phase of |R_u - R_s|.
  double gap = 0.0;
  /// Signed radial difference R_u(phi) - R_s(phi) on the section.
  std::vector<double> phases, gaps;
  int zero_count = 0;  // cyclic sign changes of the profile
  double mean_radius = 0.0;
};

/// hopf-2.3 with sign -1: traces W^u of the focus (0, 0, r) forward and W^s
/// of (0, 0, -r) backward to the section y = section_y and compares their
/// radii at equal polar angle.  Throws std::invalid_argument for other specs
/// and std::runtime_error when a trace misses the section.
SplittingMeasurement splitting_distance(const FamilySpec& spec, double r_scale,
                                        const SplittingOptions& opt = {});

struct SplittingDecay {
  std::vector<SplittingMeasurement> measurements;  // r decreasing by halves
  std::vector<double> ratios;  // gap(r/2) / gap(r) for resolved pairs
  /// Largest r such that every resolved ratio at or below it is < 1/16
  /// (0 if none).
  double r0 = 0.0;
  bool resolved_below_r0 = false;  // at least one resolved ratio <= r0
};

/// Measures r, r/2, ... (n_halvings times), stopping early once the gap
/// falls below noise_floor.
SplittingDecay splitting_decay(const FamilySpec& spec, double r_start,
                               int n_halvings, double noise_floor = 1e-10,
                               const SplittingOptions& opt = {});

}  // namespace bwp

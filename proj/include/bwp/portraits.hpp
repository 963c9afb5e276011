#pragma once

// Phase-portrait data: orbit bundles from a seed grid plus annotation layers
// (equilibrium line, bifurcation points, manifold traces, drift field).
// Rendering happens out of process from the emitted CSV files.

#include "bwp/averaging.hpp"
#include "bwp/classify.hpp"
#include "bwp/integrate.hpp"
#include "bwp/systems.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bwp {

enum class PortraitView { StatePlane, State3D, IntegralPlane };

std::string_view view_name(PortraitView v);
/// "state-plane", "state-3d", "integral-plane".  Throws std::invalid_argument.
PortraitView parse_view(std::string_view s);

/// Regular product grid of the box [lo, hi] with counts[i] points per axis
/// (a count of 1 uses the midpoint).
std::vector<State> seed_box(const std::vector<double>& lo,
                            const std::vector<double>& hi,
                            const std::vector<int>& counts);

struct PortraitSpec {
  FamilyId family = FamilyId::LineZero21;
  Params params;
  PortraitView view = PortraitView::StatePlane;
  std::vector<State> seeds;
  double t_span = 10.0;
  bool both_directions = true;
  double sample_dt = 0.05;
  IntegrateOptions integrate = [] {
    IntegrateOptions o;
    o.blowup_norm = 100.0;
    return o;
  }();
  /// Equilibrium-line window (manifold coordinate).
  double y_lo = -2.0, y_hi = 2.0;
  int n_equilibria = 81;
  /// Manifold traces from this many equally spaced sources of the window.
  int n_manifold_sources = 9;
  double manifold_delta = 1e-6;
  /// Drift grid of the integral plane: Theta values and fractions of the
  /// periodic window between center (0) and separatrix (1).
  double theta_lo = 0.1, theta_hi = 2.0;
  int n_theta = 8;
  std::vector<double> level_fractions{0.1, 0.3, 0.5, 0.7, 0.9};
  int jobs = 1;
};

/// Family-specific seed grid and windows.
PortraitSpec default_portrait(FamilyId family, const Params& params,
                              PortraitView view);

struct PortraitOrbit {
  int id = 0;
  std::string kind;       // "orbit", "unstable", "stable"
  State seed;
  int direction = 1;      // +1 forward, -1 backward in time
  double source_y = 0.0;  // manifold traces only
  IntegrationStatus status = IntegrationStatus::Completed;
  std::string message;
  std::vector<std::pair<double, State>> samples;
};

struct EquilibriumSample {
  double y = 0.0;
  State point;
  int n_unstable = 0, n_stable = 0, n_center = 0;  // transverse eigenvalues
};

struct DriftCell {
  double theta_value = 0.0, fraction = 0.0;
  std::optional<DriftSample> drift;  // empty when the level failed
  std::string message;
};

struct PortraitBundle {
  PortraitSpec spec;
  int state_dim = 0;
  std::vector<PortraitOrbit> orbits;
  std::vector<EquilibriumSample> equilibria;
  std::vector<BifurcationPoint> bifurcations;
  std::vector<DriftCell> drift;
  /// Non-fatal problems of the annotation layers.
  std::vector<std::string> notes;
};

/// Integration failures are recorded per orbit, never thrown.  Throws
/// std::invalid_argument for an invalid spec (bad parameters, integral plane
/// of a family without integrals).
PortraitBundle portrait(const PortraitSpec& spec);

std::string orbits_csv(const PortraitBundle& b);
std::string equilibria_csv(const PortraitBundle& b);
/// Drift per unit perturbation strength on the integral plane.
std::string drift_csv(const PortraitBundle& b);
std::string annotations_json(const PortraitBundle& b);

/// Plotting script referencing the CSV files; "gnuplot" is the only format.
/// Throws std::invalid_argument for other ids.
std::string emit_render_script(const PortraitBundle& b, std::string_view format);

/// Writes dir/portrait/{orbits.csv, equilibria.csv, annotations.json,
/// render.script} (+ drift.csv on the integral plane).  Returns the
/// portrait directory.
std::filesystem::path write_portrait(const PortraitBundle& b,
                                     const std::filesystem::path& dir);

}  // namespace bwp

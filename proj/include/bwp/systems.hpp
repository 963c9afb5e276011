#pragma once

// Preset vector fields with manifolds of equilibria.
//
// Every family is exposed as a first-order system.  Third-order scalar
// equations use the ordering (y, y', y'') throughout the library; planar
// families use (x, y); the Hopf family uses Cartesian (x1, x2, y).

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bwp {

using State = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Params = std::map<std::string, double>;

enum class FamilyId {
  LineZero21,
  Reflect22,
  Hopf23,
  Tb24,
  RevTb25,
  OscNetwork,
  ViscousProfile,
};

/// Stable string id, e.g. "tb-2.4".
std::string_view family_key(FamilyId id);
/// Inverse of family_key.  Throws std::invalid_argument for unknown ids.
FamilyId parse_family(std::string_view key);
const std::vector<FamilyId>& all_families();

/// dx = f(x).  `dx` is pre-sized by the caller.
using FieldFn = std::function<void(const State& x, State& dx)>;
using JacobianFn = std::function<void(const State& x, Matrix& jac)>;

/// An immutable vector field together with its declared equilibrium manifold.
///
/// The equilibrium manifold is axis-aligned: every state whose coordinates
/// outside `manifold_axes()` vanish is an equilibrium.  The manifold
/// coordinates y are the values on those axes.
class FamilySpec {
 public:
  FamilySpec(FamilyId id, Params params, int state_dim,
             std::vector<int> manifold_axes, FieldFn field,
             JacobianFn jacobian = {},
             std::vector<std::string> unfolding_params = {});

  FamilyId id() const { return id_; }
  const Params& params() const { return params_; }
  double param(const std::string& name) const;
  double param_or(const std::string& name, double fallback) const;
  int state_dim() const { return state_dim_; }
  int manifold_dim() const { return static_cast<int>(axes_.size()); }
  const std::vector<int>& manifold_axes() const { return axes_; }
  const std::vector<std::string>& unfolding_params() const { return unfolding_; }
  bool has_analytic_jacobian() const { return static_cast<bool>(jacobian_); }
  const FieldFn& field() const { return field_; }

  void eval(const State& x, State& dx) const;
  State eval(const State& x) const;

  /// Closed form when available, central differences otherwise.
  Matrix jacobian(const State& x) const;
  /// Central differences with step cbrt(eps) * max(1, |x|).
  Matrix jacobian_fd(const State& x) const;

  State manifold_point(std::span<const double> y) const;
  State manifold_point(double y) const;
  /// Values of x on the manifold axes.
  Eigen::VectorXd manifold_coords(const State& x) const;
  /// Euclidean norm of the off-manifold coordinates.
  double transverse_distance(const State& x) const;
  /// Indices of the coordinates transverse to the manifold.
  std::vector<int> transverse_axes() const;

  /// The field -f, with negated Jacobian.  Used for backward-time manifolds.
  FamilySpec time_reversed() const;

  /// Same preset rebuilt with some parameters replaced.  Throws
  /// std::logic_error for specs not built by make_family.
  FamilySpec with_params(const Params& overrides) const;

 private:
  FamilyId id_;
  Params params_;
  int state_dim_;
  std::vector<int> axes_;
  FieldFn field_;
  JacobianFn jacobian_;
  std::vector<std::string> unfolding_;
  bool reversed_ = false;
  bool preset_ = false;

  friend FamilySpec make_family(FamilyId id, const Params& params);
};

/// Build a preset.  Throws std::invalid_argument on unknown / missing / extra
/// parameter names or invalid values (negative eps, sign not +-1, ...).
FamilySpec make_family(FamilyId id, const Params& params);
FamilySpec make_family(std::string_view key, const Params& params);

/// Parameter names accepted by a preset: required first, then optional with
/// defaults.
struct ParamTable {
  std::vector<std::string> required;
  Params optional;
};
ParamTable param_table(FamilyId id);

State eval_field(const FamilySpec& spec, const State& x);
Matrix jacobian(const FamilySpec& spec, const State& x);
/// |f| at the manifold point with coordinates y.
double equilibrium_residual(const FamilySpec& spec, std::span<const double> y);
double equilibrium_residual(const FamilySpec& spec, double y);

/// Viscous-profile ODE  u'' = (F'(u) - s) u' + G(u)  with state (u, u').
struct ViscousProfileSpec {
  int u_dim = 0;
  double speed = 0.0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> flux;
  /// Optional analytic flux Jacobian F'(u); finite differences otherwise.
  std::function<Matrix(const Eigen::VectorXd&)> flux_jacobian;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> kinetics;
  /// Optional analytic G'(u).
  std::function<Matrix(const Eigen::VectorXd&)> kinetics_jacobian;
  /// u-components that stay free on {G = 0}; the remaining u components and
  /// all of u' vanish on the equilibrium manifold.
  std::vector<int> free_u_axes;
};

FamilySpec make_viscous_profile(const ViscousProfileSpec& vp,
                                Params params = {});

/// Polar chart of the Hopf family: (x1, x2, y) -> (r, phi, y).
Eigen::Vector3d hopf_to_polar(const State& cartesian);
State hopf_from_polar(double r, double phi, double y);

}  // namespace bwp

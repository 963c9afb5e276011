#pragma once

// Adaptive Dormand-Prince 5(4) integration with continuous (dense) output
// and event location.

#include "bwp/systems.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwp {

struct Tolerances {
  double rel = 1e-9;
  double abs = 1e-12;
};

/// g(state) = 0 defines the event surface.  direction +1 fires on upward
/// crossings of g, -1 on downward ones, 0 on either.
struct EventSpec {
  std::function<double(const State&)> fn;
  int direction = 0;
  bool terminal = true;
};

struct IntegrateOptions {
  Tolerances tol;
  double event_tol = 1e-10;
  /// Abort once max |x_i| exceeds this.
  double blowup_norm = 1e6;
  /// Stop once |f(x)| <= eta (heteroclinic flights).
  std::optional<double> near_equilibrium_eta;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 20'000'000;
  /// Keep the interpolation polynomials of every step.
  bool dense = true;
  /// Report events whose function vanishes at the initial state (only for
  /// direction 0).
  bool fire_at_start = true;
};

enum class IntegrationStatus {
  Completed,
  EventTerminated,
  NearEquilibrium,
  BlowUp,
  NonFinite,
  StepUnderflow,
  MaxSteps,
};

std::string_view status_name(IntegrationStatus s);

/// Time-stamped states at the accepted steps plus the 4th-order continuous
/// extension on every step.
class Trajectory {
 public:
  Trajectory() = default;

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  int dim() const { return dim_; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<State>& states() const { return states_; }
  double t_begin() const { return times_.front(); }
  double t_end() const { return times_.back(); }
  const State& front() const { return states_.front(); }
  const State& back() const { return states_.back(); }
  bool backward() const { return times_.size() > 1 && times_[1] < times_[0]; }
  bool has_dense() const { return !segments_.empty() || times_.size() == 1; }

  /// Interpolated state at t inside the span.  Throws std::out_of_range.
  State at(double t) const;
  /// Samples t_begin, t_begin + dt, ... (dt signed like the span), plus the
  /// final time.
  std::vector<std::pair<double, State>> sample(double dt) const;

  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t evaluations = 0;
  Tolerances tolerances;

 private:
  friend class DormandPrince;
  struct Segment {
    double t0;
    double h;
    Eigen::MatrixXd coeffs;  // dim x 5
  };
  const Segment& locate(double t) const;

  int dim_ = 0;
  std::vector<double> times_;
  std::vector<State> states_;
  std::vector<Segment> segments_;
};

struct EventHit {
  std::size_t index = 0;
  double t = 0.0;
  State state;
};

struct IntegrationResult {
  Trajectory trajectory;
  IntegrationStatus status = IntegrationStatus::Completed;
  std::vector<EventHit> events;
  std::string message;

  bool ok() const {
    return status == IntegrationStatus::Completed ||
           status == IntegrationStatus::EventTerminated ||
           status == IntegrationStatus::NearEquilibrium;
  }
};

/// Integrate x' = f(x) from t0 to t1 (t1 < t0 integrates backward).
/// Numerical failures (blow-up, step underflow) are reported through the
/// status; the trajectory up to the last good state is kept.
IntegrationResult integrate(const FieldFn& field, const State& x0, double t0,
                            double t1, const IntegrateOptions& options = {},
                            std::span<const EventSpec> events = {});
IntegrationResult integrate(const FamilySpec& spec, const State& x0,
                            double t0, double t1,
                            const IntegrateOptions& options = {},
                            std::span<const EventSpec> events = {});

struct UntilResult {
  /// Empty when the event did not occur before t_max (not an error).
  std::optional<EventHit> hit;
  IntegrationResult run;
};

/// Integrate until the first occurrence of `event` (always treated as
/// terminal) or |t - t0| = |t_max - t0|.
UntilResult integrate_until(const FamilySpec& spec, const State& x0,
                            const EventSpec& event, double t_max,
                            const IntegrateOptions& options = {},
                            double t0 = 0.0);

class NoReturnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First return to the section in its direction.  The initial point never
/// counts as a return.  Throws NoReturnError.
State poincare_map(const FamilySpec& spec, const EventSpec& section,
                   const State& x0, double t_max,
                   const IntegrateOptions& options = {},
                   double* return_time = nullptr);

/// Linear-in-state section  normal . x = offset.
EventSpec linear_section(const Eigen::VectorXd& normal, double offset,
                         int direction);
/// Section x_i = value.
EventSpec coordinate_section(int index, double value, int direction);

}  // namespace bwp

#include "bwp/systems.hpp"

#include "bwp/oscillators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bwp {

namespace {

struct FamilyName {
  FamilyId id;
  std::string_view key;
};

constexpr FamilyName kNames[] = {
    {FamilyId::LineZero21, "line-zero-2.1"},
    {FamilyId::Reflect22, "reflect-2.2"},
    {FamilyId::Hopf23, "hopf-2.3"},
    {FamilyId::Tb24, "tb-2.4"},
    {FamilyId::RevTb25, "rev-tb-2.5"},
    {FamilyId::OscNetwork, "osc-network"},
    {FamilyId::ViscousProfile, "viscous-profile"},
};

void check_params(FamilyId id, const Params& given, Params& resolved) {
  const ParamTable table = param_table(id);
  for (const auto& [name, value] : given) {
    const bool known = std::find(table.required.begin(), table.required.end(),
                                 name) != table.required.end() ||
                       table.optional.count(name) > 0;
    if (!known) {
      throw std::invalid_argument("family " + std::string(family_key(id)) +
                                  ": unknown parameter '" + name + "'");
    }
    if (!std::isfinite(value)) {
      throw std::invalid_argument("parameter '" + name + "' is not finite");
    }
  }
  resolved = table.optional;
  for (const auto& name : table.required) {
    auto it = given.find(name);
    if (it == given.end()) {
      throw std::invalid_argument("family " + std::string(family_key(id)) +
                                  ": missing parameter '" + name + "'");
    }
    resolved[name] = it->second;
  }
  for (const auto& [name, value] : given) resolved[name] = value;
}

double require_sign(const Params& p) {
  const double s = p.at("sign");
  if (s != 1.0 && s != -1.0) {
    throw std::invalid_argument("parameter 'sign' must be +1 or -1");
  }
  return s;
}

FamilySpec make_line_zero(const Params& p) {
  auto f = [](const State& s, State& ds) {
    ds[0] = s[0] * s[1];
    ds[1] = s[0];
  };
  auto j = [](const State& s, Matrix& m) {
    m << s[1], s[0],
         1.0, 0.0;
  };
  return {FamilyId::LineZero21, p, 2, {1}, f, j};
}

FamilySpec make_reflect(const Params& p) {
  const double sign = require_sign(p);
  auto f = [sign](const State& s, State& ds) {
    ds[0] = s[0] * s[1];
    ds[1] = sign * s[0] * s[0];
  };
  auto j = [sign](const State& s, Matrix& m) {
    m << s[1], s[0],
         2.0 * sign * s[0], 0.0;
  };
  return {FamilyId::Reflect22, p, 2, {1}, f, j};
}

FamilySpec make_hopf(const Params& p) {
  const double sign = require_sign(p);
  const double omega = p.at("omega");
  const double gamma = p.at("gamma");
  auto f = [=](const State& s, State& ds) {
    const double x1 = s[0], x2 = s[1], y = s[2];
    ds[0] = x1 * y - omega * x2;
    ds[1] = omega * x1 + x2 * y;
    ds[2] = sign * (x1 * x1 + x2 * x2) + gamma * x1 * x1 * x1;
  };
  auto j = [=](const State& s, Matrix& m) {
    const double x1 = s[0], x2 = s[1], y = s[2];
    m << y, -omega, x1,
         omega, y, x2,
         2.0 * sign * x1 + 3.0 * gamma * x1 * x1, 2.0 * sign * x2, 0.0;
  };
  return {FamilyId::Hopf23, p, 3, {2}, f, j};
}

FamilySpec make_tb24(const Params& p) {
  const double eps = p.at("eps");
  if (eps < 0.0) throw std::invalid_argument("parameter 'eps' must be >= 0");
  const double lambda = p.at("lambda");
  const double b = p.at("b");
  auto f = [=](const State& s, State& ds) {
    ds[0] = s[1];
    ds[1] = s[2];
    ds[2] = -s[0] * s[1] + eps * ((lambda - s[0]) * s[2] + b * s[1] * s[1]);
  };
  auto j = [=](const State& s, Matrix& m) {
    m << 0.0, 1.0, 0.0,
         0.0, 0.0, 1.0,
         -s[1] - eps * s[2], -s[0] + 2.0 * eps * b * s[1], eps * (lambda - s[0]);
  };
  return {FamilyId::Tb24, p, 3, {0}, f, j};
}

FamilySpec make_revtb25(const Params& p) {
  const double a = p.at("a");
  const double b = p.at("b");
  auto f = [=](const State& s, State& ds) {
    const double y = s[0];
    ds[0] = s[1];
    ds[1] = s[2];
    ds[2] = -(1.0 - 3.0 * y * y) * s[1] + a * y * s[2] + b * s[1] * s[1];
  };
  auto j = [=](const State& s, Matrix& m) {
    const double y = s[0];
    m << 0.0, 1.0, 0.0,
         0.0, 0.0, 1.0,
         6.0 * y * s[1] + a * s[2], -(1.0 - 3.0 * y * y) + 2.0 * b * s[1], a * y;
  };
  // a = b = 0 is the reversible normal form whose transverse double zeros sit
  // at 1 - 3y^2 = 0.
  return {FamilyId::RevTb25, p, 3, {0}, f, j, {"a", "b"}};
}

// Gradient flux F = grad Phi, Phi(u) = u3 (u1^2 - u2^2)/2 + alpha u1 u2, and
// kinetics G(u) = (u1, u2, 0): a line of equilibria u = (0, 0, c), u' = 0.
FamilySpec make_viscous_preset(const Params& p) {
  const double s = p.at("s");
  const double alpha = p.at("alpha");
  ViscousProfileSpec vp;
  vp.u_dim = 3;
  vp.speed = s;
  vp.flux = [alpha](const Eigen::VectorXd& u) {
    Eigen::VectorXd out(3);
    out << u[0] * u[2] + alpha * u[1], -u[1] * u[2] + alpha * u[0],
        0.5 * (u[0] * u[0] - u[1] * u[1]);
    return out;
  };
  vp.flux_jacobian = [alpha](const Eigen::VectorXd& u) {
    Matrix m(3, 3);
    m << u[2], alpha, u[0],
         alpha, -u[2], -u[1],
         u[0], -u[1], 0.0;
    return m;
  };
  vp.kinetics = [](const Eigen::VectorXd& u) {
    Eigen::VectorXd out(3);
    out << u[0], u[1], 0.0;
    return out;
  };
  vp.kinetics_jacobian = [](const Eigen::VectorXd&) {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    return m;
  };
  vp.free_u_axes = {2};
  FamilySpec base = make_viscous_profile(vp, p);
  // Analytic Jacobian of the assembled preset field.
  auto jac = [=](const State& x, Matrix& m) {
    const Eigen::Vector3d u = x.head<3>();
    const Eigen::Vector3d v = x.tail<3>();
    Matrix dfv(3, 3);  // d/du (F'(u) v)
    dfv << v[2], 0.0, v[0],
           0.0, -v[2], -v[1],
           v[0], -v[1], 0.0;
    m.setZero();
    m.block(0, 3, 3, 3).setIdentity();
    m.block(3, 0, 3, 3) = dfv + vp.kinetics_jacobian(u);
    m.block(3, 3, 3, 3) = vp.flux_jacobian(u) - s * Matrix::Identity(3, 3);
  };
  return FamilySpec(FamilyId::ViscousProfile, p, 6, base.manifold_axes(),
                    base.field(), jac);
}

}  // namespace

std::string_view family_key(FamilyId id) {
  for (const auto& n : kNames) {
    if (n.id == id) return n.key;
  }
  return "unknown";
}

FamilyId parse_family(std::string_view key) {
  for (const auto& n : kNames) {
    if (n.key == key) return n.id;
  }
  throw std::invalid_argument("unknown family '" + std::string(key) + "'");
}

const std::vector<FamilyId>& all_families() {
  static const std::vector<FamilyId> ids = {
      FamilyId::LineZero21, FamilyId::Reflect22,  FamilyId::Hopf23,
      FamilyId::Tb24,       FamilyId::RevTb25,    FamilyId::OscNetwork,
      FamilyId::ViscousProfile};
  return ids;
}

ParamTable param_table(FamilyId id) {
  switch (id) {
    case FamilyId::LineZero21: return {{}, {}};
    case FamilyId::Reflect22: return {{"sign"}, {}};
    case FamilyId::Hopf23: return {{"omega", "sign"}, {{"gamma", 0.0}}};
    case FamilyId::Tb24: return {{"eps", "lambda", "b"}, {}};
    case FamilyId::RevTb25: return {{"a", "b"}, {}};
    case FamilyId::OscNetwork:
      return {{"m"}, {{"kappa", 0.3}, {"beta", 0.5}, {"node", 0.0}}};
    case FamilyId::ViscousProfile: return {{"s"}, {{"alpha", 1.0}}};
  }
  throw std::invalid_argument("unknown family id");
}

FamilySpec::FamilySpec(FamilyId id, Params params, int state_dim,
                       std::vector<int> manifold_axes, FieldFn field,
                       JacobianFn jacobian,
                       std::vector<std::string> unfolding_params)
    : id_(id),
      params_(std::move(params)),
      state_dim_(state_dim),
      axes_(std::move(manifold_axes)),
      field_(std::move(field)),
      jacobian_(std::move(jacobian)),
      unfolding_(std::move(unfolding_params)) {
  if (state_dim_ <= 0) throw std::invalid_argument("state_dim must be positive");
  for (int a : axes_) {
    if (a < 0 || a >= state_dim_) {
      throw std::invalid_argument("manifold axis out of range");
    }
  }
}

double FamilySpec::param(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::invalid_argument("parameter '" + name + "' not set");
  }
  return it->second;
}

double FamilySpec::param_or(const std::string& name, double fallback) const {
  auto it = params_.find(name);
  return it == params_.end() ? fallback : it->second;
}

void FamilySpec::eval(const State& x, State& dx) const {
  if (x.size() != state_dim_) {
    throw std::invalid_argument("state dimension mismatch: expected " +
                                std::to_string(state_dim_) + ", got " +
                                std::to_string(x.size()));
  }
  dx.resize(state_dim_);
  field_(x, dx);
}

State FamilySpec::eval(const State& x) const {
  State dx(state_dim_);
  eval(x, dx);
  return dx;
}

Matrix FamilySpec::jacobian(const State& x) const {
  if (!jacobian_) return jacobian_fd(x);
  if (x.size() != state_dim_) {
    throw std::invalid_argument("state dimension mismatch");
  }
  Matrix m(state_dim_, state_dim_);
  jacobian_(x, m);
  return m;
}

Matrix FamilySpec::jacobian_fd(const State& x) const {
  if (x.size() != state_dim_) {
    throw std::invalid_argument("state dimension mismatch");
  }
  const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                   std::max(1.0, x.norm());
  Matrix m(state_dim_, state_dim_);
  State xp = x, xm = x, fp(state_dim_), fm(state_dim_);
  for (int j = 0; j < state_dim_; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    field_(xp, fp);
    field_(xm, fm);
    m.col(j) = (fp - fm) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return m;
}

State FamilySpec::manifold_point(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != manifold_dim()) {
    throw std::invalid_argument("manifold coordinate count mismatch");
  }
  State x = State::Zero(state_dim_);
  for (std::size_t i = 0; i < axes_.size(); ++i) x[axes_[i]] = y[i];
  return x;
}

State FamilySpec::manifold_point(double y) const {
  return manifold_point(std::span<const double>(&y, 1));
}

Eigen::VectorXd FamilySpec::manifold_coords(const State& x) const {
  Eigen::VectorXd y(axes_.size());
  for (std::size_t i = 0; i < axes_.size(); ++i) y[i] = x[axes_[i]];
  return y;
}

std::vector<int> FamilySpec::transverse_axes() const {
  std::vector<int> out;
  for (int i = 0; i < state_dim_; ++i) {
    if (std::find(axes_.begin(), axes_.end(), i) == axes_.end()) {
      out.push_back(i);
    }
  }
  return out;
}

double FamilySpec::transverse_distance(const State& x) const {
  double s = 0.0;
  for (int i : transverse_axes()) s += x[i] * x[i];
  return std::sqrt(s);
}

FamilySpec FamilySpec::time_reversed() const {
  FamilySpec out = *this;
  FieldFn f = field_;
  out.field_ = [f](const State& x, State& dx) {
    f(x, dx);
    dx = -dx;
  };
  if (jacobian_) {
    JacobianFn j = jacobian_;
    out.jacobian_ = [j](const State& x, Matrix& m) {
      j(x, m);
      m = -m;
    };
  }
  out.reversed_ = !reversed_;
  return out;
}

FamilySpec FamilySpec::with_params(const Params& overrides) const {
  if (!preset_) throw std::logic_error("with_params needs a preset family");
  Params merged = params_;
  for (const auto& [k, v] : overrides) merged[k] = v;
  FamilySpec out = make_family(id_, merged);
  return reversed_ ? out.time_reversed() : out;
}

FamilySpec make_family(FamilyId id, const Params& params) {
  Params p;
  check_params(id, params, p);
  auto build = [&]() -> FamilySpec {
    switch (id) {
      case FamilyId::LineZero21: return make_line_zero(p);
      case FamilyId::Reflect22: return make_reflect(p);
      case FamilyId::Hopf23: return make_hopf(p);
      case FamilyId::Tb24: return make_tb24(p);
      case FamilyId::RevTb25: return make_revtb25(p);
      case FamilyId::OscNetwork: return make_network_family(p);
      case FamilyId::ViscousProfile: return make_viscous_preset(p);
    }
    throw std::invalid_argument("unknown family id");
  };
  FamilySpec out = build();
  out.preset_ = true;
  return out;
}

FamilySpec make_family(std::string_view key, const Params& params) {
  return make_family(parse_family(key), params);
}

State eval_field(const FamilySpec& spec, const State& x) { return spec.eval(x); }

Matrix jacobian(const FamilySpec& spec, const State& x) {
  return spec.jacobian(x);
}

double equilibrium_residual(const FamilySpec& spec, std::span<const double> y) {
  return spec.eval(spec.manifold_point(y)).norm();
}

double equilibrium_residual(const FamilySpec& spec, double y) {
  return equilibrium_residual(spec, std::span<const double>(&y, 1));
}

FamilySpec make_viscous_profile(const ViscousProfileSpec& vp, Params params) {
  const int n = vp.u_dim;
  if (n <= 0 || !vp.flux || !vp.kinetics) {
    throw std::invalid_argument("viscous profile needs u_dim, flux and kinetics");
  }
  const double s = vp.speed;
  auto flux_jac = vp.flux_jacobian;
  if (!flux_jac) {
    auto flux = vp.flux;
    flux_jac = [flux, n](const Eigen::VectorXd& u) {
      const double h = std::cbrt(std::numeric_limits<double>::epsilon()) *
                       std::max(1.0, u.norm());
      Matrix m(n, n);
      Eigen::VectorXd up = u, um = u;
      for (int j = 0; j < n; ++j) {
        up[j] += h;
        um[j] -= h;
        m.col(j) = (flux(up) - flux(um)) / (2.0 * h);
        up[j] = u[j];
        um[j] = u[j];
      }
      return m;
    };
  }
  auto kinetics = vp.kinetics;
  auto f = [n, s, flux_jac, kinetics](const State& x, State& dx) {
    const Eigen::VectorXd u = x.head(n);
    const Eigen::VectorXd v = x.tail(n);
    dx.head(n) = v;
    dx.tail(n) = flux_jac(u) * v - s * v + kinetics(u);
  };
  if (params.count("s") == 0) params["s"] = s;
  return FamilySpec(FamilyId::ViscousProfile, std::move(params), 2 * n,
                    vp.free_u_axes, f);
}

Eigen::Vector3d hopf_to_polar(const State& c) {
  return {std::hypot(c[0], c[1]), std::atan2(c[1], c[0]), c[2]};
}

State hopf_from_polar(double r, double phi, double y) {
  State s(3);
  s << r * std::cos(phi), r * std::sin(phi), y;
  return s;
}

}  // namespace bwp

#include "bwp/classify.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace bwp {

std::string_view kind_name(BifurcationKind k) {
  switch (k) {
    case BifurcationKind::TransverseZero: return "transverse-zero";
    case BifurcationKind::Hopf: return "hopf";
    case BifurcationKind::TakensBogdanov: return "takens-bogdanov";
  }
  return "unknown";
}

std::string_view subtype_name(HopfSubtype s) {
  switch (s) {
    case HopfSubtype::Elliptic: return "elliptic";
    case HopfSubtype::Hyperbolic: return "hyperbolic";
    case HopfSubtype::Undetermined: return "undetermined";
  }
  return "unknown";
}

namespace {

Matrix transverse_block(const FamilySpec& spec, const State& x) {
  const Matrix j = spec.jacobian(x);
  const auto axes = spec.transverse_axes();
  // Tangential columns must vanish on a manifold of equilibria.
  const double scale = 1.0 + j.cwiseAbs().maxCoeff();
  for (int a : spec.manifold_axes()) {
    if (j.col(a).cwiseAbs().maxCoeff() > 1e-6 * scale) {
      throw std::invalid_argument(
          "Jacobian is not block triangular: point is not on a manifold of "
          "equilibria");
    }
  }
  const int n = static_cast<int>(axes.size());
  Matrix b(n, n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) b(r, c) = j(axes[r], axes[c]);
  }
  return b;
}

std::vector<Complex> block_eigenvalues(const Matrix& b) {
  std::vector<Complex> ev;
  if (b.rows() == 0) return ev;
  Eigen::EigenSolver<Matrix> es(b, false);
  for (int i = 0; i < b.rows(); ++i) ev.push_back(es.eigenvalues()[i]);
  std::sort(ev.begin(), ev.end(), [](Complex p, Complex q) {
    return p.real() != q.real() ? p.real() < q.real() : p.imag() < q.imag();
  });
  return ev;
}

// Real part of the complex pair closest to the imaginary axis, if any.
std::optional<double> pair_real_part(const std::vector<Complex>& ev,
                                     double imag_tol) {
  std::optional<double> best;
  for (const Complex& m : ev) {
    if (m.imag() > imag_tol) {
      if (!best || std::abs(m.real()) < std::abs(*best)) best = m.real();
    }
  }
  return best;
}

struct Indicators {
  double det = 0.0;
  std::optional<double> pair_re;
};

template <class F>
double bisect(F&& f, double a, double b, double fa, double tol) {
  for (int it = 0; it < 200 && std::abs(b - a) > tol; ++it) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm > 0) == (fa > 0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// The two eigenvalues closest to zero, compared through their sum and
// product: at a double zero located to within loc_tol the eigenvalues
// themselves are only O(sqrt(loc_tol)) small.
bool is_double_zero(std::vector<Complex> ev, double tol) {
  if (ev.size() < 2) return false;
  double scale = 1.0;
  for (const auto& m : ev) scale = std::max(scale, std::abs(m));
  std::sort(ev.begin(), ev.end(),
            [](Complex p, Complex q) { return std::abs(p) < std::abs(q); });
  return std::abs(ev[0] + ev[1]) <= tol * scale &&
         std::abs(ev[0] * ev[1]) <= tol * scale * scale;
}

HopfSubtype preset_subtype(const FamilySpec& spec) {
  try {
    return hopf_type(spec.id(), spec.params());
  } catch (const std::invalid_argument&) {
    return HopfSubtype::Undetermined;
  }
}

}  // namespace

TransverseSpectrum transverse_spectrum(const FamilySpec& spec,
                                       std::span<const double> y) {
  const State x = spec.manifold_point(y);
  const double res = spec.eval(x).norm();
  if (res > 1e-10 * (1.0 + x.norm())) {
    throw std::invalid_argument("point is not an equilibrium of the family");
  }
  TransverseSpectrum out;
  out.eigenvalues = block_eigenvalues(transverse_block(spec, x));
  double scale = 1.0;
  for (const auto& m : out.eigenvalues) scale = std::max(scale, std::abs(m));
  for (const auto& m : out.eigenvalues) {
    if (std::abs(m) <= 1e-8 * scale) out.zero_flag = true;
  }
  return out;
}

TransverseSpectrum transverse_spectrum(const FamilySpec& spec, double y) {
  return transverse_spectrum(spec, std::span<const double>(&y, 1));
}

std::vector<double> chebyshev_samples(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("need at least two samples");
  if (!(hi > lo)) throw std::invalid_argument("empty scan range");
  std::vector<double> ys(n);
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int i = 0; i < n; ++i) {
    ys[i] = mid - half * std::cos(std::numbers::pi * i / (n - 1));
  }
  ys.front() = lo;
  ys.back() = hi;
  return ys;
}

std::vector<BifurcationPoint> scan_manifold(const FamilySpec& spec, double lo,
                                            double hi, const ScanOptions& opt) {
  if (spec.manifold_dim() != 1) {
    throw std::invalid_argument("scan_manifold needs a one-dimensional manifold");
  }
  auto indicators = [&](double y) {
    const Matrix b = transverse_block(spec, spec.manifold_point(y));
    Indicators ind;
    ind.det = b.rows() ? b.determinant() : 1.0;
    ind.pair_re = pair_real_part(block_eigenvalues(b), opt.imag_tol);
    return ind;
  };
  const auto ys = chebyshev_samples(lo, hi, opt.n_samples);
  std::vector<Indicators> ind(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) ind[i] = indicators(ys[i]);

  // Takens-Bogdanov: a double zero of the transverse block once the
  // unfolding parameters are switched off.
  std::optional<FamilySpec> organizing;
  if (!spec.unfolding_params().empty()) {
    Params zero;
    for (const auto& name : spec.unfolding_params()) zero[name] = 0.0;
    organizing = spec.with_params(zero);
  }

  std::vector<BifurcationPoint> out;
  auto label = [&](double y, BifurcationKind kind) {
    BifurcationPoint p;
    p.y_star = Eigen::VectorXd::Constant(1, y);
    p.kind = kind;
    p.eigenvalues = transverse_spectrum(spec, y).eigenvalues;
    if (kind == BifurcationKind::TransverseZero) {
      const auto ev0 = organizing ? transverse_spectrum(*organizing, y).eigenvalues
                                  : p.eigenvalues;
      if (is_double_zero(ev0, opt.double_zero_tol)) {
        p.kind = BifurcationKind::TakensBogdanov;
        if (spec.id() == FamilyId::RevTb25) p.subtype = preset_subtype(spec);
      }
    } else {
      p.subtype = preset_subtype(spec);
    }
    out.push_back(std::move(p));
  };

  auto det_at = [&](double y) { return indicators(y).det; };
  auto re_at = [&](double y) {
    const auto r = indicators(y).pair_re;
    return r ? *r : std::numeric_limits<double>::quiet_NaN();
  };

  for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
    const double d0 = ind[i].det, d1 = ind[i + 1].det;
    if (d0 == 0.0) {
      label(ys[i], BifurcationKind::TransverseZero);
    } else if (d0 * d1 < 0.0) {
      label(bisect(det_at, ys[i], ys[i + 1], d0, opt.loc_tol),
            BifurcationKind::TransverseZero);
    }
    if (ind[i].pair_re && ind[i + 1].pair_re) {
      const double r0 = *ind[i].pair_re, r1 = *ind[i + 1].pair_re;
      if (r0 == 0.0) {
        label(ys[i], BifurcationKind::Hopf);
      } else if (r0 * r1 < 0.0) {
        const double y = bisect(
            [&](double v) {
              const double r = re_at(v);
              return std::isnan(r) ? r0 : r;
            },
            ys[i], ys[i + 1], r0, opt.loc_tol);
        label(y, BifurcationKind::Hopf);
      }
    }
  }
  // Last sample exactly on a root.
  if (ind.back().det == 0.0) label(ys.back(), BifurcationKind::TransverseZero);
  if (ind.back().pair_re && *ind.back().pair_re == 0.0) {
    label(ys.back(), BifurcationKind::Hopf);
  }
  std::sort(out.begin(), out.end(), [](const auto& p, const auto& q) {
    return p.y_star[0] < q.y_star[0];
  });
  return out;
}

std::vector<BifurcationPoint> scan_plane_tb24(const FamilySpec& spec,
                                              double y_lo, double y_hi,
                                              double lambda_lo,
                                              double lambda_hi, int n_lambda,
                                              const ScanOptions& opt) {
  if (spec.id() != FamilyId::Tb24) {
    throw std::invalid_argument("plane scan is defined for tb-2.4");
  }
  if (n_lambda < 1) throw std::invalid_argument("need at least one lambda value");
  std::vector<BifurcationPoint> out;
  for (int i = 0; i < n_lambda; ++i) {
    const double lam = n_lambda == 1
                           ? lambda_lo
                           : lambda_lo + (lambda_hi - lambda_lo) * i / (n_lambda - 1);
    const FamilySpec s = spec.with_params({{"lambda", lam}});
    for (auto p : scan_manifold(s, y_lo, y_hi, opt)) {
      const double y = p.y_star[0];
      p.y_star = Eigen::Vector2d(y, lam);
      out.push_back(std::move(p));
    }
  }
  return out;
}

HopfSubtype hopf_type(FamilyId family, const Params& params) {
  auto get = [&](const char* name) {
    auto it = params.find(name);
    if (it == params.end()) {
      throw std::invalid_argument(std::string("missing parameter '") + name + "'");
    }
    return it->second;
  };
  switch (family) {
    case FamilyId::Reflect22:
    case FamilyId::Hopf23: {
      const double s = get("sign");
      if (s == -1.0) return HopfSubtype::Elliptic;
      if (s == 1.0) return HopfSubtype::Hyperbolic;
      throw std::invalid_argument("parameter 'sign' must be +1 or -1");
    }
    case FamilyId::Tb24: {
      const double b = get("b");
      if (b > -17.0 / 12.0 && b < -1.0) return HopfSubtype::Hyperbolic;
      if (b > -1.0) return HopfSubtype::Elliptic;
      return HopfSubtype::Undetermined;
    }
    case FamilyId::RevTb25: {
      const double a = get("a"), b = get("b");
      const double q = a * (a - b);
      if (q > 0) return HopfSubtype::Elliptic;
      if (q < 0) return HopfSubtype::Hyperbolic;
      return HopfSubtype::Undetermined;
    }
    default:
      throw std::invalid_argument("no Hopf type criterion for family " +
                                  std::string(family_key(family)));
  }
}

DynamicCheckReport dynamic_type_check(const FamilySpec& spec, double y_star,
                                      const DynamicCheckOptions& opt) {
  if (spec.manifold_dim() != 1 || spec.transverse_axes().empty()) {
    throw std::invalid_argument("dynamic check needs a line of equilibria");
  }
  const double rho = opt.probe_radius;
  if (!(rho > 0.0)) throw std::invalid_argument("probe radius must be positive");
  State x0 = spec.manifold_point(y_star);
  x0[spec.transverse_axes().front()] = rho;

  const auto dist = [spec](const State& x) { return spec.transverse_distance(x); };
  const EventSpec events[2] = {
      {[=](const State& x) { return dist(x) - rho / 10.0; }, -1, true},
      {[=](const State& x) { return dist(x) - 10.0 * rho; }, +1, true},
  };
  IntegrateOptions io = opt.integrate;
  io.dense = false;
  io.fire_at_start = false;
  const int axis = spec.manifold_axes().front();

  DynamicCheckReport rep;
  bool landed[2] = {false, false}, escaped[2] = {false, false};
  for (int dir = 0; dir < 2; ++dir) {
    const double t1 = dir == 0 ? opt.t_max : -opt.t_max;
    const IntegrationResult r = integrate(spec, x0, 0.0, t1, io, events);
    double& t_out = dir == 0 ? rep.forward_time : rep.backward_time;
    double& y_out = dir == 0 ? rep.forward_y : rep.backward_y;
    (dir == 0 ? rep.forward_status : rep.backward_status) = r.status;
    t_out = r.trajectory.t_end();
    y_out = r.trajectory.back()[axis];
    if (!r.events.empty()) {
      if (r.events.front().index == 0) landed[dir] = true;
      else escaped[dir] = true;
    } else if (r.status == IntegrationStatus::BlowUp ||
               r.status == IntegrationStatus::NonFinite) {
      escaped[dir] = true;
    }
  }
  if (escaped[0] || escaped[1]) {
    rep.subtype = HopfSubtype::Hyperbolic;
  } else if (landed[0] && landed[1] &&
             (rep.forward_y - y_star) * (rep.backward_y - y_star) < 0.0) {
    rep.subtype = HopfSubtype::Elliptic;
  }
  return rep;
}

}  // namespace bwp

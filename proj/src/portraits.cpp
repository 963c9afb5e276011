#include "bwp/portraits.hpp"

#include "bwp/connections.hpp"
#include "bwp/integrals.hpp"
#include "bwp/io.hpp"
#include "bwp/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace bwp {

std::string_view view_name(PortraitView v) {
  switch (v) {
    case PortraitView::StatePlane: return "state-plane";
    case PortraitView::State3D: return "state-3d";
    case PortraitView::IntegralPlane: return "integral-plane";
  }
  return "unknown";
}

PortraitView parse_view(std::string_view s) {
  for (auto v : {PortraitView::StatePlane, PortraitView::State3D, PortraitView::IntegralPlane}) {
    if (view_name(v) == s) return v;
  }
  throw std::invalid_argument("unknown view '" + std::string(s) + "'");
}

std::vector<State> seed_box(const std::vector<double>& lo, const std::vector<double>& hi,
                            const std::vector<int>& counts) {
  const std::size_t d = lo.size();
  if (hi.size() != d || counts.size() != d || d == 0) {
    throw std::invalid_argument("seed box needs matching lo/hi/count vectors");
  }
  for (int c : counts) {
    if (c < 1) throw std::invalid_argument("seed box counts must be >= 1");
  }
  auto coord = [&](std::size_t axis, int k) {
    if (counts[axis] == 1) return 0.5 * (lo[axis] + hi[axis]);
    return lo[axis] + (hi[axis] - lo[axis]) * k / (counts[axis] - 1);
  };
  std::vector<State> out;
  std::vector<int> idx(d, 0);
  while (true) {
    State x(static_cast<int>(d));
    for (std::size_t a = 0; a < d; ++a) x[a] = coord(a, idx[a]);
    out.push_back(x);
    // Last axis fastest.
    std::size_t a = d;
    while (a > 0) {
      --a;
      if (++idx[a] < counts[a]) break;
      idx[a] = 0;
      if (a == 0) return out;
    }
  }
}

PortraitSpec default_portrait(FamilyId family, const Params& params, PortraitView view) {
  PortraitSpec s;
  s.family = family;
  s.params = params;
  s.view = view;
  switch (family) {
    case FamilyId::LineZero21:
      s.seeds = seed_box({-1.0, -1.5}, {1.0, 1.5}, {4, 5});
      s.t_span = 5.0;
      break;
    case FamilyId::Reflect22:
      s.seeds = seed_box({0.2, -0.5}, {1.0, 0.5}, {5, 3});
      s.t_span = 10.0;
      break;
    case FamilyId::Hopf23:
      s.seeds = seed_box({0.1, 0.0, -0.8}, {0.7, 0.0, 0.8}, {4, 1, 5});
      s.t_span = 30.0;
      s.y_lo = -1.0;
      s.y_hi = 1.0;
      break;
    case FamilyId::Tb24:
      s.seeds = seed_box({-1.0, -0.5, -0.5}, {1.0, 0.5, 0.5}, {3, 3, 3});
      s.t_span = 20.0;
      s.theta_lo = 0.1;
      s.theta_hi = 2.0;
      break;
    case FamilyId::RevTb25:
      s.seeds = seed_box({-0.8, -0.3, -0.3}, {0.8, 0.3, 0.3}, {3, 3, 3});
      s.t_span = 20.0;
      s.y_lo = -1.5;
      s.y_hi = 1.5;
      s.theta_lo = -0.3;
      s.theta_hi = 0.3;
      s.n_theta = 7;
      break;
    case FamilyId::OscNetwork:
    case FamilyId::ViscousProfile: {
      const int dim = make_family(family, params).state_dim();
      for (int k = 0; k < 4; ++k) {
        State x(dim);
        for (int i = 0; i < dim; ++i) x[i] = 0.1 * (k + 1) * ((i % 2) ? -1.0 : 1.0);
        s.seeds.push_back(x);
      }
      s.t_span = 20.0;
      break;
    }
  }
  return s;
}

namespace {

bool has_integrals(FamilyId f) { return f == FamilyId::Tb24 || f == FamilyId::RevTb25; }

struct OrbitTask {
  std::string kind;
  State seed;
  int direction = 1;
  double source_y = 0.0;
};

PortraitOrbit run_orbit(const FamilySpec& spec, const FamilySpec& reversed,
                        const OrbitTask& task, const PortraitSpec& ps) {
  PortraitOrbit o;
  o.kind = task.kind;
  o.seed = task.seed;
  o.direction = task.direction;
  o.source_y = task.source_y;
  IntegrateOptions io = ps.integrate;
  io.dense = true;
  const bool manifold = task.kind != "orbit";
  if (manifold) io.near_equilibrium_eta = 1e-9;
  try {
    IntegrationResult r;
    if (task.kind == "stable") {
      // Traced as the unstable manifold of the reversed field; stored in
      // original time.
      r = integrate(reversed, task.seed, 0.0, ps.t_span, io);
    } else {
      r = integrate(spec, task.seed, 0.0, task.direction * ps.t_span, io);
    }
    o.status = r.status;
    o.message = r.message;
    if (!r.trajectory.empty()) {
      const double dt = r.trajectory.backward() ? -ps.sample_dt : ps.sample_dt;
      o.samples = r.trajectory.size() > 1 ? r.trajectory.sample(dt)
                                          : std::vector<std::pair<double, State>>{
                                                {r.trajectory.t_begin(), r.trajectory.front()}};
      if (task.kind == "stable") {
        for (auto& [t, x] : o.samples) t = -t;
      }
    }
  } catch (const std::exception& e) {
    o.status = IntegrationStatus::NonFinite;
    o.message = e.what();
  }
  return o;
}

}  // namespace

PortraitBundle portrait(const PortraitSpec& ps) {
  if (!(ps.t_span > 0.0) || !(ps.sample_dt > 0.0)) {
    throw std::invalid_argument("t_span and sample_dt must be positive");
  }
  if (!(ps.y_lo < ps.y_hi)) throw std::invalid_argument("empty equilibrium window");
  const FamilySpec spec = make_family(ps.family, ps.params);
  if (ps.view == PortraitView::IntegralPlane && !has_integrals(ps.family)) {
    throw std::invalid_argument("integral plane needs tb-2.4 or rev-tb-2.5");
  }
  if (ps.view == PortraitView::StatePlane && spec.state_dim() < 2) {
    throw std::invalid_argument("state plane needs a state of dimension >= 2");
  }
  if (ps.view == PortraitView::State3D && spec.state_dim() < 3) {
    throw std::invalid_argument("3d view needs a state of dimension >= 3");
  }
  for (const auto& x : ps.seeds) {
    if (x.size() != spec.state_dim()) {
      throw std::invalid_argument("seed dimension does not match the family");
    }
  }
  const FamilySpec reversed = spec.time_reversed();

  PortraitBundle b;
  b.spec = ps;
  b.state_dim = spec.state_dim();

  std::vector<OrbitTask> tasks;
  for (const auto& x : ps.seeds) {
    tasks.push_back({"orbit", x, 1, 0.0});
    if (ps.both_directions) tasks.push_back({"orbit", x, -1, 0.0});
  }

  const bool line = spec.manifold_dim() == 1;
  if (line) {
    for (int k = 0; k < ps.n_equilibria; ++k) {
      const double y = ps.n_equilibria == 1
                           ? 0.5 * (ps.y_lo + ps.y_hi)
                           : ps.y_lo + (ps.y_hi - ps.y_lo) * k / (ps.n_equilibria - 1);
      EquilibriumSample e;
      e.y = y;
      e.point = spec.manifold_point(y);
      const TransverseSpectrum ts = transverse_spectrum(spec, y);
      const double scale = 1e-10 * std::max(1.0, std::abs(y));
      for (const auto& mu : ts.eigenvalues) {
        if (mu.real() > scale) ++e.n_unstable;
        else if (mu.real() < -scale) ++e.n_stable;
        else ++e.n_center;
      }
      b.equilibria.push_back(std::move(e));
    }
    try {
      b.bifurcations = scan_manifold(spec, ps.y_lo, ps.y_hi);
    } catch (const std::exception& e) {
      b.notes.push_back(std::string("bifurcation scan failed: ") + e.what());
    }
    for (int k = 0; k < ps.n_manifold_sources; ++k) {
      const double y = ps.y_lo + (ps.y_hi - ps.y_lo) * (k + 0.5) / ps.n_manifold_sources;
      for (auto dir : {ManifoldDirection::Unstable, ManifoldDirection::Stable}) {
        try {
          const ManifoldSeeds ms = manifold_seed(spec, y, dir, ps.manifold_delta, 4);
          for (const auto& x : ms.seeds) {
            tasks.push_back({dir == ManifoldDirection::Unstable ? "unstable" : "stable", x,
                             dir == ManifoldDirection::Unstable ? 1 : -1, y});
          }
        } catch (const NoSeedError&) {
          // No eigenvalue of that stability here: nothing to draw.
        }
      }
    }
  } else {
    b.notes.push_back("no one-dimensional equilibrium line: line layers omitted");
  }

  b.orbits.resize(tasks.size());
  parallel_for(tasks.size(), ps.jobs, [&](std::size_t i) {
    b.orbits[i] = run_orbit(spec, reversed, tasks[i], ps);
    b.orbits[i].id = static_cast<int>(i);
  });

  if (ps.view == PortraitView::IntegralPlane) {
    if (ps.n_theta < 1) throw std::invalid_argument("n_theta must be >= 1");
    for (int k = 0; k < ps.n_theta; ++k) {
      const double th = ps.n_theta == 1
                            ? 0.5 * (ps.theta_lo + ps.theta_hi)
                            : ps.theta_lo + (ps.theta_hi - ps.theta_lo) * k / (ps.n_theta - 1);
      for (double f : ps.level_fractions) {
        DriftCell c;
        c.theta_value = th;
        c.fraction = f;
        b.drift.push_back(c);
      }
    }
    parallel_for(b.drift.size(), ps.jobs, [&](std::size_t i) {
      DriftCell& c = b.drift[i];
      try {
        const PlanarSystem planar(ps.family, c.theta_value);
        const PeriodicWindow w = periodic_window(planar);
        const double h = w.h_center + c.fraction * (w.h_saddle - w.h_center);
        c.drift = averaged_drift(ps.family, ps.params, c.theta_value, h);
      } catch (const std::exception& e) {
        c.message = e.what();
      }
    });
  }
  return b;
}

std::string orbits_csv(const PortraitBundle& b) {
  const bool ints = b.spec.view == PortraitView::IntegralPlane;
  std::vector<std::string> header{"orbit", "kind", "direction", "t"};
  for (int i = 0; i < b.state_dim; ++i) header.push_back("c" + std::to_string(i));
  if (ints) {
    for (const char* h : {"theta", "H", "tau", "H_tilde"}) header.emplace_back(h);
  }
  std::ostringstream os;
  CsvWriter w(os, header);
  for (const auto& o : b.orbits) {
    for (const auto& [t, x] : o.samples) {
      w << o.id << o.kind << o.direction << t;
      for (int i = 0; i < x.size(); ++i) w << x[i];
      if (ints) {
        const IntegralPair ip = integrals(b.spec.family, x);
        w << ip.theta << ip.hamiltonian;
        if (b.spec.family == FamilyId::Tb24 && ip.theta > 0.0) {
          const ScaledCoords sc = scaled_coords(ip.theta, ip.hamiltonian);
          w << sc.tau << sc.h_tilde;
        } else {
          w << std::nan("") << std::nan("");
        }
      }
      w.end_row();
    }
  }
  return os.str();
}

std::string equilibria_csv(const PortraitBundle& b) {
  std::vector<std::string> header{"y"};
  for (int i = 0; i < b.state_dim; ++i) header.push_back("c" + std::to_string(i));
  for (const char* h : {"n_unstable", "n_stable", "n_center"}) header.emplace_back(h);
  std::ostringstream os;
  CsvWriter w(os, header);
  for (const auto& e : b.equilibria) {
    w << e.y;
    for (int i = 0; i < e.point.size(); ++i) w << e.point[i];
    w << e.n_unstable << e.n_stable << e.n_center;
    w.end_row();
  }
  return os.str();
}

std::string drift_csv(const PortraitBundle& b) {
  std::ostringstream os;
  CsvWriter w(os, {"theta", "fraction", "H", "d_theta", "d_H", "period", "tau", "H_tilde",
                   "d_tau", "d_H_tilde", "error_estimate", "status"});
  const double nan = std::nan("");
  for (const auto& c : b.drift) {
    w << c.theta_value << c.fraction;
    if (!c.drift) {
      for (int i = 0; i < 9; ++i) w << nan;
      w << "failed";
      w.end_row();
      continue;
    }
    const DriftSample& d = *c.drift;
    w << d.h_value << d.d_theta << d.d_h << d.period;
    if (b.spec.family == FamilyId::Tb24 && d.theta_value > 0.0) {
      const ScaledCoords sc = scaled_coords(d.theta_value, d.h_value);
      const double s = std::pow(d.theta_value, -1.5);
      w << sc.tau << sc.h_tilde << d.d_theta / d.theta_value
        << s * (d.d_h - 1.5 * d.h_value * d.d_theta / d.theta_value);
    } else {
      w << nan << nan << nan << nan;
    }
    w << d.error_estimate << "ok";
    w.end_row();
  }
  return os.str();
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

std::string annotations_json(const PortraitBundle& b) {
  const PortraitSpec& s = b.spec;
  nlohmann::json j;
  j["family"] = std::string(family_key(s.family));
  j["params"] = params_json(s.params);
  j["view"] = std::string(view_name(s.view));
  j["state_dim"] = b.state_dim;
  j["t_span"] = s.t_span;
  j["sample_dt"] = s.sample_dt;
  j["tolerances"] = {{"rel", s.integrate.tol.rel}, {"abs", s.integrate.tol.abs}};
  nlohmann::json orbits = nlohmann::json::array();
  for (const auto& o : b.orbits) {
    nlohmann::json e{{"id", o.id},
                     {"kind", o.kind},
                     {"direction", o.direction},
                     {"seed", vec_json(o.seed)},
                     {"status", std::string(status_name(o.status))},
                     {"samples", o.samples.size()}};
    if (o.kind != "orbit") e["source_y"] = o.source_y;
    if (!o.message.empty()) e["message"] = o.message;
    orbits.push_back(std::move(e));
  }
  j["orbits"] = std::move(orbits);
  if (!b.equilibria.empty()) {
    const FamilySpec spec = make_family(s.family, s.params);
    j["equilibrium_line"] = {{"axis", spec.manifold_axes().front()},
                             {"y_lo", s.y_lo},
                             {"y_hi", s.y_hi},
                             {"samples", b.equilibria.size()},
                             {"file", "equilibria.csv"}};
  }
  nlohmann::json bif = nlohmann::json::array();
  for (const auto& p : b.bifurcations) {
    nlohmann::json eig = nlohmann::json::array();
    for (const auto& mu : p.eigenvalues) eig.push_back({mu.real(), mu.imag()});
    bif.push_back({{"y_star", vec_json(p.y_star)},
                   {"kind", std::string(kind_name(p.kind))},
                   {"subtype", std::string(subtype_name(p.subtype))},
                   {"eigenvalues", std::move(eig)}});
  }
  j["bifurcations"] = std::move(bif);
  if (s.view == PortraitView::IntegralPlane) {
    std::size_t failed = 0;
    for (const auto& c : b.drift) failed += c.drift ? 0 : 1;
    j["drift"] = {{"file", "drift.csv"}, {"cells", b.drift.size()}, {"failed", failed}};
    if (s.family == FamilyId::Tb24) {
      j["boundaries"] = {{"H_tilde", {-h_tilde_bound(), h_tilde_bound()}},
                         {"center_line", -h_tilde_bound()},
                         {"homoclinic", h_tilde_bound()}};
    }
  }
  j["notes"] = b.notes;
  return j.dump(2) + "\n";
}

namespace {

std::string rgb(const std::string& kind) {
  if (kind == "unstable") return "'#d62728'";
  if (kind == "stable") return "'#2ca02c'";
  return "'#7f7f7f'";
}

// Column of a per-orbit filtered series; non-matching rows become NaN and
// break the line.
std::string pick(int id, int col) {
  return "(column(1)==" + std::to_string(id) + " ? column(" + std::to_string(col) + ") : NaN)";
}

}  // namespace

std::string emit_render_script(const PortraitBundle& b, std::string_view format) {
  if (format != "gnuplot") {
    throw std::invalid_argument("unsupported render format '" + std::string(format) + "'");
  }
  const PortraitSpec& s = b.spec;
  std::ostringstream os;
  os << "# gnuplot script; run inside the portrait directory\n"
     << "set datafile separator ','\n"
     << "set datafile missing 'nan'\n"
     << "set key off\n"
     << "set title '" << family_key(s.family) << " (" << view_name(s.view) << ")'\n"
     << "set terminal pngcairo size 900,700\n"
     << "set output 'portrait.png'\n";
  const int c0 = 5;  // first state column in orbits.csv
  std::vector<std::string> parts;
  if (s.view == PortraitView::IntegralPlane) {
    const bool scaled = s.family == FamilyId::Tb24;
    // orbits.csv: theta, H, tau, H_tilde follow the state columns.
    const int xc = c0 + b.state_dim + (scaled ? 2 : 0), yc = xc + 1;
    // drift.csv: theta,fraction,H,d_theta,d_H,period,tau,H_tilde,d_tau,d_H_tilde
    const int dx = scaled ? 7 : 1, dy = scaled ? 8 : 3, ddx = scaled ? 9 : 4, ddy = scaled ? 10 : 5;
    double span = 0.0, big = 0.0;
    double lo = 1e300, hi = -1e300;
    for (const auto& c : b.drift) {
      if (!c.drift) continue;
      const double x = scaled ? std::log(c.theta_value) : c.theta_value;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      const DriftSample& d = *c.drift;
      if (scaled) {
        const double ht = std::pow(d.theta_value, -1.5);
        big = std::max({big, std::abs(d.d_theta / d.theta_value),
                        std::abs(ht * (d.d_h - 1.5 * d.h_value * d.d_theta / d.theta_value))});
      } else {
        big = std::max({big, std::abs(d.d_theta), std::abs(d.d_h)});
      }
    }
    span = hi > lo ? hi - lo : 1.0;
    const double k = big > 0.0 ? 0.05 * span / big : 1.0;
    os << "set xlabel '" << (scaled ? "tau = log Theta" : "Theta") << "'\n"
       << "set ylabel '" << (scaled ? "H~" : "H") << "'\n"
       << "k = " << format_double(k) << "\n";
    if (scaled) {
      os << "hb = " << format_double(h_tilde_bound()) << "\n";
      parts.push_back("hb with lines dt 2 lc rgb 'black'");
      parts.push_back("-hb with lines dt 2 lc rgb 'black'");
    }
    parts.push_back("'drift.csv' every ::1 using " + std::to_string(dx) + ":" +
                    std::to_string(dy) + ":(k*column(" + std::to_string(ddx) + ")):(k*column(" +
                    std::to_string(ddy) + ")) with vectors head filled lc rgb '#1f77b4'");
    for (const auto& o : b.orbits) {
      if (o.kind != "orbit") continue;
      parts.push_back("'orbits.csv' every ::1 using " + pick(o.id, xc) + ":" +
                      "(column(" + std::to_string(yc) + ")) with lines lc rgb " + rgb(o.kind));
    }
    os << "plot ";
  } else {
    const bool three = s.view == PortraitView::State3D;
    const int dims = three ? 3 : 2;
    for (int a = 0; a < dims; ++a) {
      os << "set " << "xyz"[a] << "label 'c" << a << "'\n";
    }
    if (three) os << "set view 60,30\n";
    for (const auto& o : b.orbits) {
      std::string u = pick(o.id, c0);
      for (int a = 1; a < dims; ++a) u += ":(column(" + std::to_string(c0 + a) + "))";
      parts.push_back("'orbits.csv' every ::1 using " + u + " with lines lc rgb " + rgb(o.kind));
    }
    if (!b.equilibria.empty()) {
      std::string u = "2";
      for (int a = 1; a < dims; ++a) u += ":" + std::to_string(2 + a);
      parts.push_back("'equilibria.csv' every ::1 using " + u +
                      " with lines lw 2 lc rgb 'black'");
    }
    os << (three ? "splot " : "plot ");
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    os << (i ? ", \\\n     " : "") << parts[i];
  }
  os << "\n";
  return os.str();
}

std::filesystem::path write_portrait(const PortraitBundle& b, const std::filesystem::path& dir) {
  const auto out = ensure_directory(dir / "portrait");
  write_text_file(out / "orbits.csv", orbits_csv(b));
  write_text_file(out / "equilibria.csv", equilibria_csv(b));
  write_text_file(out / "annotations.json", annotations_json(b));
  write_text_file(out / "render.script", emit_render_script(b, "gnuplot"));
  if (b.spec.view == PortraitView::IntegralPlane) {
    write_text_file(out / "drift.csv", drift_csv(b));
  }
  return out;
}

}  // namespace bwp

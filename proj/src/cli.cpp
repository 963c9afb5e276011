#include "bwp/cli.hpp"

#include "bwp/averaging.hpp"
#include "bwp/classify.hpp"
#include "bwp/connections.hpp"
#include "bwp/integrals.hpp"
#include "bwp/io.hpp"
#include "bwp/oscillators.hpp"
#include "bwp/parallel.hpp"
#include "bwp/portraits.hpp"
#include "bwp/systems.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace bwp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Numerical failure after partial artifacts were written.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double parse_number(std::string_view s, const std::string& what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && *b == '+') ++b;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || b == e) {
    throw UsageError("cannot parse " + what + " '" + std::string(s) + "' as a number");
  }
  return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::size_t end = comma == std::string::npos ? s.size() : comma;
    out.push_back(parse_number(std::string_view(s).substr(start, end - start), what));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::pair<double, double> parse_range(const std::string& s, const std::string& what) {
  // A leading '-' may belong to the lower bound, so split at the first ':'.
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos) throw UsageError(what + " must look like lo:hi");
  const double lo = parse_number(std::string_view(s).substr(0, colon), what);
  const double hi = parse_number(std::string_view(s).substr(colon + 1), what);
  if (!(lo < hi)) throw UsageError(what + " needs lo < hi");
  return {lo, hi};
}

Params parse_params(const std::vector<std::string>& items) {
  Params p;
  for (const auto& it : items) {
    const std::size_t eq = it.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--param expects key=value, got '" + it + "'");
    }
    p[it.substr(0, eq)] = parse_number(std::string_view(it).substr(eq + 1), "parameter");
  }
  return p;
}

Params params_from(const json& j) {
  Params p;
  for (auto it = j.begin(); it != j.end(); ++it) p[it.key()] = it.value().get<double>();
  return p;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Options bound to CLI11, converted to the persisted config.

struct Common {
  std::string family;
  std::vector<std::string> params;
  double rel = 1e-9, abs = 1e-12;
  std::optional<std::string> out;
  int jobs = 0;
  std::string save_config, from_config;
};

struct Opts {
  // simulate
  std::string init;
  double t = 10.0, t0 = 0.0, dt = 0.0;
  bool no_integrals = false;
  // classify
  std::string range = "-2:2";
  int samples = 1024;
  int spectrum = 0;
  bool dynamic = false;
  // average / melnikov / portrait
  std::string theta_range;
  int n_theta = 8;
  std::string fractions = "0.1,0.3,0.5,0.7,0.9";
  int n = 64;
  std::string mode = "split";
  std::string orientation = "increasing";
  // heteroclinic
  double source = 0.0;
  double delta = 1e-6, t_max = 500.0, accept_tol = 1e-6;
  bool backward = false;
  int n_ring = 8;
  // splitting
  double r_start = 1.0;
  int halvings = 3, n_seeds = 64, n_phase = 128;
  double split_delta = 1e-7, noise_floor = 1e-10;
  // osc
  int m = 1;
  std::string phases;
  double sample_dt = 0.1;
  // portrait
  std::string view;
  double t_span = 0.0;
  std::string y_range;
};

void add_common(CLI::App* sub, Common& c, bool family) {
  if (family) sub->add_option("--family", c.family, "family id, e.g. tb-2.4");
  sub->add_option("--param", c.params, "parameter key=value (repeatable)");
  sub->add_option("--rel", c.rel, "relative integration tolerance")->capture_default_str();
  sub->add_option("--abs", c.abs, "absolute integration tolerance")->capture_default_str();
  sub->add_option("--out", c.out, "output directory (BWP_OUT overrides)");
  sub->add_option("--jobs", c.jobs, "worker threads (0: all cores)");
  sub->add_option("--save-config", c.save_config, "write the run configuration as JSON");
  sub->add_option("--from-config", c.from_config, "run a saved configuration");
}

json build_config(const std::string& cmd, const Common& c, const Opts& o) {
  json cfg;
  cfg["command"] = cmd;
  Params p = parse_params(c.params);
  std::string family = c.family;
  if (cmd == "splitting") {
    if (family.empty()) family = "hopf-2.3";
    p.try_emplace("omega", 1.0);
    p.try_emplace("sign", -1.0);
    p.try_emplace("gamma", 0.1);
  } else if (cmd == "osc") {
    family = "osc-network";
    p["m"] = o.m;
  }
  if (family.empty()) throw UsageError("--family is required");
  cfg["family"] = family;
  // Resolved parameters (optional defaults filled in) so a saved run does
  // not depend on the defaults of a later build.
  cfg["params"] = params_json(make_family(family, p).params());
  cfg["tolerances"] = {{"rel", c.rel}, {"abs", c.abs}};
  json& op = cfg["options"];
  if (cmd == "simulate") {
    if (o.init.empty()) throw UsageError("--init is required");
    op = {{"init", parse_list(o.init, "--init")},
          {"t0", o.t0},
          {"t", o.t},
          {"dt", o.dt},
          {"integrals", !o.no_integrals}};
  } else if (cmd == "classify") {
    const auto [lo, hi] = parse_range(o.range, "--range");
    op = {{"lo", lo}, {"hi", hi}, {"samples", o.samples}, {"spectrum", o.spectrum},
          {"dynamic", o.dynamic}};
  } else if (cmd == "average") {
    if (o.theta_range.empty()) throw UsageError("--theta-range is required");
    const auto [lo, hi] = parse_range(o.theta_range, "--theta-range");
    op = {{"theta_lo", lo}, {"theta_hi", hi}, {"n_theta", o.n_theta},
          {"fractions", parse_list(o.fractions, "--fractions")}};
  } else if (cmd == "melnikov") {
    if (o.theta_range.empty()) throw UsageError("--theta-range is required");
    const auto [lo, hi] = parse_range(o.theta_range, "--theta-range");
    op = {{"theta_lo", lo}, {"theta_hi", hi}, {"n", o.n}, {"mode", o.mode},
          {"orientation", o.orientation}};
  } else if (cmd == "heteroclinic") {
    op = {{"source", o.source},     {"delta", o.delta},       {"t_max", o.t_max},
          {"accept_tol", o.accept_tol}, {"backward", o.backward}, {"n_ring", o.n_ring},
          {"dt", o.dt}};
  } else if (cmd == "splitting") {
    op = {{"r_start", o.r_start},  {"halvings", o.halvings},       {"n_seeds", o.n_seeds},
          {"n_phase", o.n_phase},  {"delta", o.split_delta},       {"noise_floor", o.noise_floor}};
  } else if (cmd == "osc") {
    op = {{"t", o.t}, {"sample_dt", o.sample_dt}};
    if (!o.phases.empty()) op["phases"] = parse_list(o.phases, "--phases");
  } else if (cmd == "portrait") {
    op = json::object();
    if (!o.view.empty()) op["view"] = o.view;
    if (o.t_span > 0.0) op["t_span"] = o.t_span;
    if (!o.y_range.empty()) {
      const auto [lo, hi] = parse_range(o.y_range, "--y-range");
      op["y_lo"] = lo;
      op["y_hi"] = hi;
    }
    if (!o.theta_range.empty()) {
      const auto [lo, hi] = parse_range(o.theta_range, "--theta-range");
      op["theta_lo"] = lo;
      op["theta_hi"] = hi;
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Commands.  Each reads only the config.

struct Context {
  json cfg;
  fs::path out;
  int jobs = 0;
  std::ostream& log;

  FamilySpec spec() const { return make_family(cfg.at("family").get<std::string>(), params()); }
  Params params() const { return params_from(cfg.at("params")); }
  const json& opt() const { return cfg.at("options"); }
  IntegrateOptions integrate() const {
    IntegrateOptions io;
    io.tol.rel = cfg.at("tolerances").at("rel").get<double>();
    io.tol.abs = cfg.at("tolerances").at("abs").get<double>();
    return io;
  }
};

json eigen_json(const std::vector<Complex>& ev) {
  json a = json::array();
  for (const auto& mu : ev) a.push_back({mu.real(), mu.imag()});
  return a;
}

int cmd_simulate(const Context& c) {
  const FamilySpec spec = c.spec();
  const auto init = c.opt().at("init").get<std::vector<double>>();
  if (static_cast<int>(init.size()) != spec.state_dim()) {
    throw UsageError("--init needs " + std::to_string(spec.state_dim()) + " components");
  }
  const State x0 = Eigen::Map<const State>(init.data(), init.size());
  const double t0 = c.opt().at("t0").get<double>();
  const double t1 = t0 + c.opt().at("t").get<double>();
  const IntegrationResult r = integrate(spec, x0, t0, t1, c.integrate());
  const bool ints = c.opt().at("integrals").get<bool>();
  write_text_file(c.out / "trajectory.csv",
                  trajectory_csv(r.trajectory, c.opt().at("dt").get<double>(),
                                 ints ? &spec : nullptr));
  json meta = trajectory_metadata(spec, r.trajectory, r.status);
  if (!r.message.empty()) meta["message"] = r.message;
  write_text_file(c.out / "trajectory.json", dump(meta));
  if (!r.ok()) {
    throw NumericalFailure("integration stopped: " + std::string(status_name(r.status)) +
                           (r.message.empty() ? "" : " (" + r.message + ")"));
  }
  c.log << "trajectory: " << r.trajectory.size() << " steps, t_end "
        << format_double(r.trajectory.t_end()) << "\n";
  return 0;
}

int cmd_classify(const Context& c) {
  const FamilySpec spec = c.spec();
  const double lo = c.opt().at("lo").get<double>(), hi = c.opt().at("hi").get<double>();
  ScanOptions so;
  so.n_samples = c.opt().at("samples").get<int>();
  if (so.n_samples < 2) throw UsageError("--samples must be >= 2");
  const auto points = scan_manifold(spec, lo, hi, so);
  const bool dynamic = c.opt().at("dynamic").get<bool>();
  json list = json::array();
  for (const auto& p : points) {
    json e{{"y_star", p.y_star.size() == 1 ? json(p.y_star[0]) : json(std::vector<double>(
                                                 p.y_star.data(), p.y_star.data() + p.y_star.size()))},
           {"kind", std::string(kind_name(p.kind))},
           {"subtype", std::string(subtype_name(p.subtype))},
           {"eigenvalues", eigen_json(p.eigenvalues)}};
    if (dynamic && p.kind == BifurcationKind::Hopf) {
      DynamicCheckOptions dopt;
      dopt.integrate = c.integrate();
      const auto rep = dynamic_type_check(spec, p.y_star[0], dopt);
      e["dynamic_subtype"] = std::string(subtype_name(rep.subtype));
    }
    list.push_back(std::move(e));
  }
  write_text_file(c.out / "classify.json", dump(list));
  const int ns = c.opt().at("spectrum").get<int>();
  if (ns > 0) {
    const int nt = static_cast<int>(spec.transverse_axes().size());
    std::vector<std::string> header{"y"};
    for (int i = 0; i < nt; ++i) {
      header.push_back("re" + std::to_string(i));
      header.push_back("im" + std::to_string(i));
    }
    std::vector<TransverseSpectrum> rows(ns);
    std::vector<double> ys(ns);
    for (int k = 0; k < ns; ++k) ys[k] = ns == 1 ? lo : lo + (hi - lo) * k / (ns - 1);
    parallel_for(ns, c.jobs, [&](std::size_t k) { rows[k] = transverse_spectrum(spec, ys[k]); });
    std::ostringstream os;
    CsvWriter w(os, header);
    for (int k = 0; k < ns; ++k) {
      w << ys[k];
      for (const auto& mu : rows[k].eigenvalues) w << mu.real() << mu.imag();
      w.end_row();
    }
    write_text_file(c.out / "spectrum.csv", os.str());
  }
  c.log << points.size() << " bifurcation point(s)\n";
  return 0;
}

int cmd_average(const Context& c) {
  const FamilySpec spec = c.spec();
  const double lo = c.opt().at("theta_lo").get<double>();
  const double hi = c.opt().at("theta_hi").get<double>();
  const int nt = c.opt().at("n_theta").get<int>();
  const auto fr = c.opt().at("fractions").get<std::vector<double>>();
  if (nt < 1 || fr.empty()) throw UsageError("need at least one Theta and one level");
  for (double f : fr) {
    if (!(f >= 0.0 && f < 1.0)) throw UsageError("level fractions must lie in [0, 1)");
  }
  struct Cell {
    double theta = 0.0, fraction = 0.0;
    std::optional<DriftSample> d;
    std::string error;
  };
  std::vector<Cell> cells;
  for (int k = 0; k < nt; ++k) {
    const double th = nt == 1 ? lo : lo + (hi - lo) * k / (nt - 1);
    for (double f : fr) cells.push_back({th, f, std::nullopt, {}});
  }
  IntegrateOptions io = orbit_tolerances();
  parallel_for(cells.size(), c.jobs, [&](std::size_t i) {
    Cell& cell = cells[i];
    try {
      const PlanarSystem planar(spec.id(), cell.theta);
      const PeriodicWindow w = periodic_window(planar);
      const double h = w.h_center + cell.fraction * (w.h_saddle - w.h_center);
      cell.d = averaged_drift(spec.id(), spec.params(), cell.theta, h, io);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  std::ostringstream os;
  CsvWriter w(os, {"theta", "H", "d_theta", "d_H", "T", "fraction", "error_estimate", "status"});
  std::size_t failed = 0;
  const double nan = std::nan("");
  for (const auto& cell : cells) {
    if (cell.d) {
      w << cell.theta << cell.d->h_value << cell.d->d_theta << cell.d->d_h << cell.d->period
        << cell.fraction << cell.d->error_estimate << "ok";
    } else {
      ++failed;
      w << cell.theta << nan << nan << nan << nan << cell.fraction << nan << "failed";
    }
    w.end_row();
  }
  write_text_file(c.out / "average.csv", os.str());
  if (failed > 0) {
    std::string first;
    for (const auto& cell : cells) {
      if (!cell.d) {
        first = cell.error;
        break;
      }
    }
    throw NumericalFailure(std::to_string(failed) + " level(s) failed, first: " + first);
  }
  c.log << cells.size() << " drift samples\n";
  return 0;
}

int cmd_melnikov(const Context& c) {
  const FamilySpec spec = c.spec();
  const std::string mode = c.opt().at("mode").get<std::string>();
  const std::string orient = c.opt().at("orientation").get<std::string>();
  if (mode != "split" && mode != "theta") throw UsageError("--mode must be split or theta");
  if (orient != "increasing" && orient != "decreasing") {
    throw UsageError("--orientation must be increasing or decreasing");
  }
  MelnikovOptions mo;
  mo.orientation = orient == "increasing" ? Orientation::Increasing : Orientation::Decreasing;
  const auto rep = melnikov_zeros(spec.id(), spec.params(), c.opt().at("theta_lo").get<double>(),
                                  c.opt().at("theta_hi").get<double>(), c.opt().at("n").get<int>(),
                                  mode == "split" ? MelnikovScan::Split : MelnikovScan::Theta, mo);
  std::ostringstream os;
  CsvWriter w(os, {"theta", "m_theta", "m_h", "m_split", "error_estimate"});
  for (const auto& [th, m] : rep.samples) {
    w << th << m.m_theta << m.m_h << m.m_split << m.error_estimate;
    w.end_row();
  }
  write_text_file(c.out / "melnikov.csv", os.str());
  json zeros = json::array();
  for (const auto& z : rep.zeros) {
    zeros.push_back({{"theta", z.theta_value}, {"slope", z.slope}, {"simple", z.simple}});
  }
  json j{{"family", c.cfg.at("family")},
         {"mode", mode},
         {"theta_lo", rep.theta_lo},
         {"theta_hi", rep.theta_hi},
         {"zeros", std::move(zeros)},
         {"discontinuities", rep.discontinuities},
         {"sign_changes", rep.sign_changes},
         {"unique", rep.unique}};
  write_text_file(c.out / "melnikov_zeros.json", dump(j));
  c.log << rep.zeros.size() << " zero(s)\n";
  return 0;
}

json connection_json(const Connection& k) {
  return {{"source", k.source_y},
          {"target", k.target_y},
          {"flight_time", k.flight_time},
          {"residual", k.closest_residual},
          {"homoclinic", k.homoclinic},
          {"backward", k.backward},
          {"seed_index", k.seed_index},
          {"status", std::string(status_name(k.status))}};
}

int cmd_heteroclinic(const Context& c) {
  const FamilySpec spec = c.spec();
  HeteroclinicOptions ho;
  ho.delta = c.opt().at("delta").get<double>();
  ho.t_max = c.opt().at("t_max").get<double>();
  ho.accept_tol = c.opt().at("accept_tol").get<double>();
  ho.backward = c.opt().at("backward").get<bool>();
  ho.n_ring = c.opt().at("n_ring").get<int>();
  ho.integrate = c.integrate();
  if (!(ho.delta >= 1e-8 && ho.delta <= 1e-4)) throw UsageError("--delta must lie in [1e-8, 1e-4]");
  const double source = c.opt().at("source").get<double>();
  const double dt = c.opt().at("dt").get<double>();
  try {
    const Connection k = find_heteroclinic(spec, source, ho);
    json j = connection_json(k);
    j["connected"] = true;
    write_text_file(c.out / "heteroclinic.json", dump(j));
    write_text_file(c.out / "heteroclinic_orbit.csv", trajectory_csv(k.orbit, dt));
    c.log << "connection " << format_double(k.source_y) << " -> " << format_double(k.target_y)
          << "\n";
    return 0;
  } catch (const NoConnectionError& e) {
    json j = connection_json(e.best);
    j["connected"] = false;
    write_text_file(c.out / "heteroclinic.json", dump(j));
    if (!e.best.orbit.empty()) {
      write_text_file(c.out / "heteroclinic_orbit.csv", trajectory_csv(e.best.orbit, dt));
    }
    throw NumericalFailure(e.what());
  }
}

int cmd_splitting(const Context& c) {
  const FamilySpec spec = c.spec();
  SplittingOptions so;
  so.n_seeds = c.opt().at("n_seeds").get<int>();
  so.n_phase = c.opt().at("n_phase").get<int>();
  so.delta = c.opt().at("delta").get<double>();
  const auto d = splitting_decay(spec, c.opt().at("r_start").get<double>(),
                                 c.opt().at("halvings").get<int>(),
                                 c.opt().at("noise_floor").get<double>(), so);
  std::ostringstream os;
  CsvWriter w(os, {"r", "gap", "zero_count", "mean_radius"});
  for (const auto& m : d.measurements) {
    w << m.r_scale << m.gap << m.zero_count << m.mean_radius;
    w.end_row();
  }
  write_text_file(c.out / "splitting.csv", os.str());
  json j{{"gamma", spec.param("gamma")},
         {"ratios", d.ratios},
         {"r0", d.r0},
         {"resolved_below_r0", d.resolved_below_r0}};
  write_text_file(c.out / "splitting.json", dump(j));
  c.log << "r0 = " << format_double(d.r0) << "\n";
  return 0;
}

int cmd_osc(const Context& c) {
  const FamilySpec net = c.spec();
  const Params& p = net.params();
  const OctahedralGraph g(static_cast<int>(p.at("m")));
  const NodeDynamics node =
      p.at("node") == 0.0 ? default_node(p.at("kappa"), p.at("beta")) : symmetric_node(p.at("kappa"));
  const int nd = network_node_dim(net, g);
  std::vector<double> phases;
  if (c.opt().contains("phases")) {
    phases = c.opt().at("phases").get<std::vector<double>>();
  } else {
    for (int j = 0; j < g.pair_count(); ++j) phases.push_back(0.7 * j);
  }
  if (static_cast<int>(phases.size()) != g.pair_count()) {
    throw UsageError("--phases needs " + std::to_string(g.pair_count()) + " values");
  }
  IntegrateOptions io = c.integrate();
  io.tol.rel = std::min(io.tol.rel, 1e-11);
  io.tol.abs = std::min(io.tol.abs, 1e-13);
  Eigen::VectorXd u0 = Eigen::VectorXd::Zero(nd);
  u0[0] = 1.0;
  const BaseOrbit base = base_orbit(node, u0, io);
  const PhaseTorusOrbit torus =
      phase_torus_orbit(g, std::vector<BaseOrbit>(g.pair_count(), base), phases);
  const State x0 = torus.at(0.0);
  const double t_end = c.opt().at("t").get<double>();
  const IntegrationResult r = integrate(net, x0, 0.0, t_end, io);

  std::vector<std::string> header{"t", "vertex"};
  for (int i = 0; i < nd; ++i) header.push_back("u" + std::to_string(i));
  std::ostringstream os;
  CsvWriter w(os, header);
  double antipode = 0.0;
  for (const auto& [t, x] : r.trajectory.sample(c.opt().at("sample_dt").get<double>())) {
    antipode = std::max(antipode, antipode_residual(x, g, nd));
    for (int k = 0; k < g.vertex_count(); ++k) {
      const int v = g.vertex(k);
      const Eigen::VectorXd u = vertex_state(x, g, v, nd);
      w << t << v;
      for (int i = 0; i < nd; ++i) w << u[i];
      w.end_row();
    }
  }
  write_text_file(c.out / "osc_vertices.csv", os.str());
  const DecouplingReport dec = decoupling_defect(net, g, {node}, x0, t_end, io);
  json j{{"m", g.m()},
         {"vertices", g.vertex_count()},
         {"edges", g.edge_count()},
         {"phases", phases},
         {"status", std::string(status_name(r.status))},
         {"antipode_residual", antipode},
         {"decoupling_defect", dec.defect},
         {"phase_torus_residual", phase_torus_residual(net, torus)},
         {"fixed_point_residual", fixed_point_residual(net, torus, nd, io)}};
  write_text_file(c.out / "osc.json", dump(j));
  if (!r.ok()) throw NumericalFailure("network integration: " + std::string(status_name(r.status)));
  return 0;
}

int cmd_portrait(const Context& c) {
  const FamilySpec spec = c.spec();
  const json& o = c.opt();
  PortraitView view = spec.state_dim() >= 3 ? PortraitView::State3D : PortraitView::StatePlane;
  if (o.contains("view")) view = parse_view(o.at("view").get<std::string>());
  PortraitSpec ps = default_portrait(spec.id(), spec.params(), view);
  ps.integrate.tol = c.integrate().tol;
  if (o.contains("t_span")) ps.t_span = o.at("t_span").get<double>();
  if (o.contains("y_lo")) {
    ps.y_lo = o.at("y_lo").get<double>();
    ps.y_hi = o.at("y_hi").get<double>();
  }
  if (o.contains("theta_lo")) {
    ps.theta_lo = o.at("theta_lo").get<double>();
    ps.theta_hi = o.at("theta_hi").get<double>();
  }
  ps.jobs = c.jobs;
  const PortraitBundle b = portrait(ps);
  write_portrait(b, c.out);
  c.log << b.orbits.size() << " orbits\n";
  return 0;
}

int dispatch(const Context& c) {
  const std::string cmd = c.cfg.at("command").get<std::string>();
  if (cmd == "simulate") return cmd_simulate(c);
  if (cmd == "classify") return cmd_classify(c);
  if (cmd == "average") return cmd_average(c);
  if (cmd == "melnikov") return cmd_melnikov(c);
  if (cmd == "heteroclinic") return cmd_heteroclinic(c);
  if (cmd == "splitting") return cmd_splitting(c);
  if (cmd == "osc") return cmd_osc(c);
  if (cmd == "portrait") return cmd_portrait(c);
  throw UsageError("unknown command '" + cmd + "'");
}

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError("malformed config '" + path + "': " + e.what());
  }
}

}  // namespace

fs::path resolve_output_dir(const std::optional<std::string>& flag) {
  if (const char* env = std::getenv("BWP_OUT"); env && *env) return fs::path(env);
  if (flag && !flag->empty()) return fs::path(*flag);
  return fs::path("bwp_out");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamical systems with manifolds of equilibria", "bwp"};
  app.require_subcommand(1);
  Common common;
  Opts o;

  auto* sim = app.add_subcommand("simulate", "integrate one trajectory");
  add_common(sim, common, true);
  sim->add_option("--init", o.init, "initial state, comma separated");
  sim->add_option("--t", o.t, "integration time")->capture_default_str();
  sim->add_option("--t0", o.t0, "initial time");
  sim->add_option("--dt", o.dt, "output sampling step (0: integrator steps)");
  sim->add_flag("--no-integrals", o.no_integrals, "omit the first-integral columns");

  auto* cls = app.add_subcommand("classify", "bifurcation points on the equilibrium line");
  add_common(cls, common, true);
  cls->add_option("--range", o.range, "y window lo:hi")->capture_default_str();
  cls->add_option("--samples", o.samples, "scan samples")->capture_default_str();
  cls->add_option("--spectrum", o.spectrum, "also write N spectrum samples to spectrum.csv");
  cls->add_flag("--dynamic", o.dynamic, "confirm Hopf subtypes by integration");

  auto* avg = app.add_subcommand("average", "averaged drift over periodic orbits");
  add_common(avg, common, true);
  avg->add_option("--theta-range", o.theta_range, "Theta window lo:hi");
  avg->add_option("--n-theta", o.n_theta, "Theta samples")->capture_default_str();
  avg->add_option("--fractions", o.fractions, "levels as fractions center->separatrix")
      ->capture_default_str();

  auto* mel = app.add_subcommand("melnikov", "Melnikov integrals and their zeros");
  add_common(mel, common, true);
  mel->add_option("--theta-range", o.theta_range, "Theta window lo:hi");
  mel->add_option("--n", o.n, "scan samples")->capture_default_str();
  mel->add_option("--mode", o.mode, "split | theta")->capture_default_str();
  mel->add_option("--orientation", o.orientation, "increasing | decreasing")
      ->capture_default_str();

  auto* het = app.add_subcommand("heteroclinic", "shoot for a heteroclinic connection");
  add_common(het, common, true);
  het->add_option("--source", o.source, "source equilibrium y");
  het->add_option("--delta", o.delta, "seed distance")->capture_default_str();
  het->add_option("--t-max", o.t_max, "flight time cap")->capture_default_str();
  het->add_option("--accept-tol", o.accept_tol, "acceptance residual")->capture_default_str();
  het->add_flag("--backward", o.backward, "trace the stable manifold backward");
  het->add_option("--n-ring", o.n_ring, "ring seeds for complex pairs")->capture_default_str();
  het->add_option("--dt", o.dt, "orbit CSV sampling step (0: integrator steps)");

  auto* spl = app.add_subcommand("splitting", "separatrix splitting at an elliptic Hopf point");
  add_common(spl, common, true);
  spl->add_option("--r-start", o.r_start, "largest radius")->capture_default_str();
  spl->add_option("--halvings", o.halvings, "number of halvings")->capture_default_str();
  spl->add_option("--n-seeds", o.n_seeds, "ring seeds")->capture_default_str();
  spl->add_option("--n-phase", o.n_phase, "section phases")->capture_default_str();
  spl->add_option("--delta", o.split_delta, "ring radius")->capture_default_str();
  spl->add_option("--noise-floor", o.noise_floor, "unresolved gap level")->capture_default_str();

  auto* osc = app.add_subcommand("osc", "octahedral oscillator network demo");
  add_common(osc, common, false);
  osc->add_option("--m", o.m, "network size (1: square, 2: octahedron)")->capture_default_str();
  osc->add_option("--t", o.t, "integration time")->capture_default_str();
  osc->add_option("--phases", o.phases, "phases of the positive vertices");
  osc->add_option("--sample-dt", o.sample_dt, "CSV sampling step")->capture_default_str();

  auto* por = app.add_subcommand("portrait", "phase-portrait data and gnuplot script");
  add_common(por, common, true);
  por->add_option("--view", o.view, "state-plane | state-3d | integral-plane");
  por->add_option("--t-span", o.t_span, "integration time per orbit");
  por->add_option("--y-range", o.y_range, "equilibrium window lo:hi");
  por->add_option("--theta-range", o.theta_range, "integral-plane Theta window lo:hi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    std::ostringstream help;
    const int code = app.exit(e, help, err);
    (void)code;
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string cmd = sub->get_name();
  json cfg;
  try {
    if (!common.from_config.empty()) {
      cfg = load_config(common.from_config);
      if (cfg.value("command", std::string()) != cmd) {
        throw UsageError("config '" + common.from_config + "' is for command '" +
                         cfg.value("command", std::string()) + "'");
      }
      // Validate the family and parameters up front.
      make_family(cfg.at("family").get<std::string>(), params_from(cfg.at("params")));
    } else {
      cfg = build_config(cmd, common, o);
    }
    if (!common.save_config.empty()) write_text_file(common.save_config, dump(cfg));
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "error: bad config: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  fs::path dir;
  try {
    dir = ensure_directory(resolve_output_dir(common.out));
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const Context ctx{cfg, dir, common.jobs, out};
  auto report = [&](const std::string& kind, const std::string& what) {
    try {
      write_text_file(dir / "failure.json",
                      dump({{"command", cmd}, {"kind", kind}, {"error", what}}));
    } catch (const IoError&) {
    }
  };
  try {
    return dispatch(ctx);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    err << "error: bad config: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    report("numerical", e.what());
    return 1;
  }
}

}  // namespace bwp

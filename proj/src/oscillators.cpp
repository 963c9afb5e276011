#include "bwp/oscillators.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace bwp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Vector2d rot90(const Eigen::VectorXd& u) { return {-u[1], u[0]}; }

}  // namespace

OctahedralGraph::OctahedralGraph(int m) : m_(m) {
  if (m < 0) throw std::invalid_argument("octahedral graph needs m >= 0");
}

int OctahedralGraph::index(int vertex) const {
  const int j = std::abs(vertex);
  if (vertex == 0 || j > m_ + 1) throw std::out_of_range("no such vertex");
  return 2 * (j - 1) + (vertex < 0 ? 1 : 0);
}

int OctahedralGraph::vertex(int index) const {
  if (index < 0 || index >= vertex_count()) throw std::out_of_range("no such index");
  const int j = index / 2 + 1;
  return index % 2 == 0 ? j : -j;
}

bool OctahedralGraph::adjacent(int v, int w) const {
  index(v);
  index(w);
  return std::abs(v) != std::abs(w);
}

std::vector<int> OctahedralGraph::neighbors(int v) const {
  std::vector<int> out;
  for (int i = 0; i < vertex_count(); ++i) {
    const int w = vertex(i);
    if (adjacent(v, w)) out.push_back(w);
  }
  return out;
}

int OctahedralGraph::degree(int v) const {
  return static_cast<int>(neighbors(v).size());
}

std::size_t OctahedralGraph::edge_count() const {
  return static_cast<std::size_t>(2 * m_ * (m_ + 1));
}

NodeDynamics default_node(double kappa, double beta) {
  NodeDynamics n;
  n.dim = 2;
  n.name = "default";
  n.f = [kappa, beta](const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    const double radial = (1.0 - u.squaredNorm()) * (1.0 + beta * u[0] * u[0]);
    Eigen::VectorXd du = rot90(u) + radial * u;
    du += kappa * w + kappa * w.squaredNorm() * rot90(u);
    return du;
  };
  return n;
}

NodeDynamics symmetric_node(double kappa) {
  NodeDynamics n;
  n.dim = 2;
  n.name = "symmetric";
  n.f = [kappa](const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    Eigen::VectorXd du = rot90(u) + (1.0 - u.squaredNorm()) * u;
    du += kappa * w + kappa * w.squaredNorm() * rot90(u);
    return du;
  };
  return n;
}

NodeDynamics normalize_period(NodeDynamics node, double period) {
  if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
  const double scale = period / kTwoPi;
  NodeField f = node.f;
  node.f = [f, scale](const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    return Eigen::VectorXd(scale * f(u, w));
  };
  return node;
}

int network_node_dim(const FamilySpec& network, const OctahedralGraph& graph) {
  return network.state_dim() / graph.vertex_count();
}

Eigen::VectorXd vertex_state(const State& x, const OctahedralGraph& graph,
                             int vertex, int node_dim) {
  return x.segment(graph.index(vertex) * node_dim, node_dim);
}

Eigen::VectorXd coupling_input(const State& x, const OctahedralGraph& graph,
                               int vertex, int node_dim) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(node_dim);
  const int own = std::abs(vertex);
  for (int j = 1; j <= graph.pair_count(); ++j) {
    if (j == own) continue;
    w += x.segment(graph.index(j) * node_dim, node_dim) +
         x.segment(graph.index(-j) * node_dim, node_dim);
  }
  return w;
}

FamilySpec build_network(const OctahedralGraph& graph,
                         const std::vector<NodeDynamics>& nodes,
                         bool oddness_check, std::uint64_t seed) {
  const int nv = graph.vertex_count();
  if (nodes.size() != 1 && static_cast<int>(nodes.size()) != nv) {
    throw std::invalid_argument("need one shared node field or one per vertex");
  }
  std::vector<NodeDynamics> per(nv);
  for (int i = 0; i < nv; ++i) per[i] = nodes.size() == 1 ? nodes[0] : nodes[i];
  const int n = per[0].dim;
  for (const auto& nd : per) {
    if (nd.dim != n || !nd.f) throw std::invalid_argument("inconsistent node fields");
  }

  if (oddness_check) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    for (int j = 1; j <= graph.pair_count(); ++j) {
      const auto& fp = per[graph.index(j)].f;
      const auto& fm = per[graph.index(-j)].f;
      for (int s = 0; s < 32; ++s) {
        Eigen::VectorXd u(n);
        for (int i = 0; i < n; ++i) u[i] = unif(rng);
        const Eigen::VectorXd a = fp(u, zero);
        const Eigen::VectorXd b = fm(-u, zero);
        if ((a + b).norm() > 1e-12 * std::max(1.0, a.norm())) {
          throw OddnessViolation("oddness f_{-j}(-u,0) = -f_j(u,0) violated at vertex " +
                                     std::to_string(j),
                                 j, u);
        }
      }
    }
  }

  auto field = [graph, per, n](const State& x, State& dx) {
    // Pair sums s_j = u_j + u_{-j}; the input to pair j is the sum of the
    // other pair sums.
    const int pairs = graph.pair_count();
    std::vector<Eigen::VectorXd> sums(pairs);
    for (int j = 0; j < pairs; ++j) {
      sums[j] = x.segment(2 * j * n, n) + x.segment((2 * j + 1) * n, n);
    }
    for (int j = 0; j < pairs; ++j) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < pairs; ++k) {
        if (k != j) w += sums[k];
      }
      for (int side = 0; side < 2; ++side) {
        const int idx = 2 * j + side;
        dx.segment(idx * n, n) = per[idx].f(x.segment(idx * n, n), w);
      }
    }
  };
  Params p{{"m", static_cast<double>(graph.m())}};
  return FamilySpec(FamilyId::OscNetwork, p, nv * n, {}, field);
}

FamilySpec make_network_family(const Params& params) {
  const double m_raw = params.at("m");
  if (m_raw < 0 || std::floor(m_raw) != m_raw) {
    throw std::invalid_argument("parameter 'm' must be a nonnegative integer");
  }
  const double kappa = params.at("kappa");
  const double beta = params.at("beta");
  const double node = params.at("node");
  NodeDynamics nd;
  if (node == 0.0) {
    nd = default_node(kappa, beta);
  } else if (node == 1.0) {
    nd = symmetric_node(kappa);
  } else {
    throw std::invalid_argument("parameter 'node' must be 0 (default) or 1 (symmetric)");
  }
  OctahedralGraph g(static_cast<int>(m_raw));
  FamilySpec base = build_network(g, {nd});
  return FamilySpec(FamilyId::OscNetwork, params, base.state_dim(), {},
                    base.field());
}

double antipode_residual(const State& x, const OctahedralGraph& graph,
                         int node_dim) {
  double worst = 0.0;
  for (int j = 1; j <= graph.pair_count(); ++j) {
    const double d = (vertex_state(x, graph, j, node_dim) +
                      vertex_state(x, graph, -j, node_dim))
                         .norm();
    worst = std::max(worst, d);
  }
  return worst;
}

State antipode_state(const OctahedralGraph& graph,
                     const std::vector<Eigen::VectorXd>& positive) {
  if (static_cast<int>(positive.size()) != graph.pair_count()) {
    throw std::invalid_argument("need one state per positive vertex");
  }
  const int n = static_cast<int>(positive[0].size());
  State x(graph.vertex_count() * n);
  for (int j = 1; j <= graph.pair_count(); ++j) {
    x.segment(graph.index(j) * n, n) = positive[j - 1];
    x.segment(graph.index(-j) * n, n) = -positive[j - 1];
  }
  return x;
}

DecouplingReport decoupling_defect(const FamilySpec& network,
                                   const OctahedralGraph& graph,
                                   const std::vector<NodeDynamics>& nodes,
                                   const State& x0, double t_end,
                                   const IntegrateOptions& options, double dt) {
  const int n = network_node_dim(network, graph);
  IntegrateOptions opt = options;
  opt.dense = true;
  const IntegrationResult full = integrate(network, x0, 0.0, t_end, opt);
  if (!full.ok()) {
    throw std::runtime_error("network integration failed: " + full.message);
  }

  // Each antipodal pair on its own, with zero coupling input.
  std::vector<Trajectory> pairs;
  for (int j = 1; j <= graph.pair_count(); ++j) {
    const int ip = graph.index(j), im = graph.index(-j);
    const NodeField fp = (nodes.size() == 1 ? nodes[0] : nodes[ip]).f;
    const NodeField fm = (nodes.size() == 1 ? nodes[0] : nodes[im]).f;
    FieldFn pair_field = [fp, fm, n](const State& x, State& dx) {
      const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
      dx.head(n) = fp(x.head(n), zero);
      dx.tail(n) = fm(x.tail(n), zero);
    };
    State p0(2 * n);
    p0.head(n) = x0.segment(ip * n, n);
    p0.tail(n) = x0.segment(im * n, n);
    IntegrationResult r = integrate(pair_field, p0, 0.0, t_end, opt);
    if (!r.ok()) throw std::runtime_error("pair integration failed: " + r.message);
    pairs.push_back(std::move(r.trajectory));
  }

  DecouplingReport rep;
  for (const auto& [t, x] : full.trajectory.sample(dt)) {
    rep.antipode_residual = std::max(rep.antipode_residual,
                                     antipode_residual(x, graph, n));
    for (int j = 1; j <= graph.pair_count(); ++j) {
      const State v = pairs[j - 1].at(t);
      const double dp = (x.segment(graph.index(j) * n, n) - v.head(n)).norm();
      const double dm = (x.segment(graph.index(-j) * n, n) - v.tail(n)).norm();
      rep.defect = std::max({rep.defect, dp, dm});
    }
  }
  return rep;
}

Eigen::VectorXd BaseOrbit::at(double t) const {
  double s = std::fmod(t, period);
  if (s < 0) s += period;
  return orbit.at(std::min(s, orbit.t_end()));
}

BaseOrbit base_orbit(const NodeDynamics& node, const Eigen::VectorXd& u0,
                     const IntegrateOptions& options, double period_tol) {
  const int n = node.dim;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  NodeField f = node.f;
  FieldFn field = [f, zero](const State& x, State& dx) { dx = f(x, zero); };
  const Eigen::VectorXd v0 = f(u0, zero);
  EventSpec section{[v0, u0](const State& x) { return v0.dot(x - u0); }, +1, true};
  IntegrateOptions opt = options;
  opt.fire_at_start = false;
  IntegrationResult r = integrate(field, u0, 0.0, 4.0 * kTwoPi, opt,
                                  std::span(&section, 1));
  if (r.events.empty()) throw std::runtime_error("node orbit did not return");
  const double period = r.events.front().t;
  if (std::abs(period - kTwoPi) > period_tol) {
    throw std::runtime_error("base orbit period " + std::to_string(period) +
                             " differs from 2 pi");
  }
  BaseOrbit out;
  out.period = period;
  out.orbit = std::move(r.trajectory);
  return out;
}

PhaseTorusOrbit::PhaseTorusOrbit(OctahedralGraph graph,
                                 std::vector<BaseOrbit> base,
                                 std::vector<double> phases)
    : graph_(graph), base_(std::move(base)), phases_(std::move(phases)) {
  if (static_cast<int>(base_.size()) != graph_.pair_count() ||
      static_cast<int>(phases_.size()) != graph_.pair_count()) {
    throw std::invalid_argument("need m+1 base orbits and phases");
  }
}

State PhaseTorusOrbit::at(double t) const {
  std::vector<Eigen::VectorXd> pos;
  for (int j = 0; j < graph_.pair_count(); ++j) {
    pos.push_back(base_[j].at(t + phases_[j]));
  }
  return antipode_state(graph_, pos);
}

PhaseTorusOrbit phase_torus_orbit(const OctahedralGraph& graph,
                                  std::vector<BaseOrbit> base_orbits,
                                  std::vector<double> phases) {
  for (const auto& b : base_orbits) {
    if (std::abs(b.period - kTwoPi) > 1e-8) {
      throw std::invalid_argument("base orbit period mismatch");
    }
  }
  return PhaseTorusOrbit(graph, std::move(base_orbits), std::move(phases));
}

double phase_torus_residual(const FamilySpec& network,
                            const PhaseTorusOrbit& orbit, int samples) {
  const double h = 1e-3;
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double t = kTwoPi * i / samples;
    const State d = (-orbit.at(t + 2 * h) + 8.0 * orbit.at(t + h) -
                     8.0 * orbit.at(t - h) + orbit.at(t - 2 * h)) /
                    (12.0 * h);
    worst = std::max(worst, (d - network.eval(orbit.at(t))).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

EventSpec phase_section(const OctahedralGraph& graph, int node_dim) {
  const int idx = graph.index(graph.pair_count()) * node_dim + 1;
  return coordinate_section(idx, 0.0, +1);
}

double fixed_point_residual(const FamilySpec& network,
                            const PhaseTorusOrbit& orbit, int node_dim,
                            const IntegrateOptions& options) {
  const auto& g = orbit.graph();
  // Time at which the last pair's base orbit sits on the section: its phase
  // angle is fixed at zero there, leaving the other m phases free.
  const EventSpec sec = phase_section(g, node_dim);
  const double t_on = -orbit.phases().back();
  State x0 = orbit.at(t_on);
  // Snap onto the section; the interpolated base orbit is only accurate to
  // the integrator tolerance.
  x0[g.index(g.pair_count()) * node_dim + 1] = 0.0;
  x0[g.index(-g.pair_count()) * node_dim + 1] = -0.0;
  const State x1 = poincare_map(network, sec, x0, 3.0 * kTwoPi, options);
  return (x1 - x0).norm();
}

}  // namespace bwp

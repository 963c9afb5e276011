#pragma once

// Oscillators u_j on the octahedral graph (complete graph on the vertices
// +-1, ..., +-(m+1) minus the antipodal edges), additively coupled:
//
//   u_j' = f_j(u_j, sum_{k != +-j} u_k).
//
// On the antipode space u_{-j} = -u_j the coupling input vanishes and the
// flow splits into independent antipodal pairs.

#include "bwp/integrate.hpp"
#include "bwp/systems.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bwp {

class OctahedralGraph {
 public:
  explicit OctahedralGraph(int m);

  int m() const { return m_; }
  int pair_count() const { return m_ + 1; }
  int vertex_count() const { return 2 * (m_ + 1); }
  /// Storage index of vertex v in {+-1, ..., +-(m+1)}: +j -> 2(j-1),
  /// -j -> 2(j-1)+1.
  int index(int vertex) const;
  int vertex(int index) const;
  bool adjacent(int v, int w) const;
  std::vector<int> neighbors(int vertex) const;
  int degree(int vertex) const;
  std::size_t edge_count() const;

 private:
  int m_;
};

/// f(u, w) with w the summed coupling input.
using NodeField =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& u, const Eigen::VectorXd& w)>;

struct NodeDynamics {
  int dim = 2;
  NodeField f;
  std::string name;
};

/// u' = J u + (1 - |u|^2)(1 + beta u1^2) u + kappa w + kappa |w|^2 J u.
/// Odd in u at w = 0, not rotation equivariant; stable cycle u = (cos t, sin t).
NodeDynamics default_node(double kappa, double beta);
/// Stuart-Landau node u' = J u + (1 - |u|^2) u + kappa w + kappa |w|^2 J u,
/// equivariant under simultaneous rotation of u and w.
NodeDynamics symmetric_node(double kappa);
/// Rescale time so a node with cycle period `period` gets period 2 pi.
NodeDynamics normalize_period(NodeDynamics node, double period);

class OddnessViolation : public std::invalid_argument {
 public:
  OddnessViolation(const std::string& what, int vertex, Eigen::VectorXd witness)
      : std::invalid_argument(what), vertex(vertex), witness(std::move(witness)) {}
  int vertex;
  Eigen::VectorXd witness;
};

/// Assemble the network field.  `nodes` holds one entry shared by all
/// vertices or one per storage index.  With `oddness_check` the antipodal
/// symmetry f_{-j}(-u, 0) = -f_j(u, 0) is sampled on random u and an
/// OddnessViolation carries the offending sample.
FamilySpec build_network(const OctahedralGraph& graph,
                         const std::vector<NodeDynamics>& nodes,
                         bool oddness_check = true, std::uint64_t seed = 7);

/// Preset used by make_family(OscNetwork, {m, kappa, beta, node}).
FamilySpec make_network_family(const Params& params);

int network_node_dim(const FamilySpec& network, const OctahedralGraph& graph);
Eigen::VectorXd vertex_state(const State& x, const OctahedralGraph& graph,
                             int vertex, int node_dim);
/// sum_{k != +-j} u_k, accumulated pairwise so it is exactly zero on the
/// antipode space.
Eigen::VectorXd coupling_input(const State& x, const OctahedralGraph& graph,
                               int vertex, int node_dim);

/// max_j |u_{-j} + u_j|.
double antipode_residual(const State& x, const OctahedralGraph& graph,
                         int node_dim);
/// Antipode-space state from the m+1 states of the positive vertices.
State antipode_state(const OctahedralGraph& graph,
                     const std::vector<Eigen::VectorXd>& positive);

struct DecouplingReport {
  double defect = 0.0;            // max_t max_j |u_j(t) - v_j(t)|
  double antipode_residual = 0.0; // max_t along the network trajectory
};

/// Integrates the full network and the decoupled pairs u' = f(u, 0) from the
/// same data and compares them on samples every `dt`.
DecouplingReport decoupling_defect(const FamilySpec& network,
                                   const OctahedralGraph& graph,
                                   const std::vector<NodeDynamics>& nodes,
                                   const State& x0, double t_end,
                                   const IntegrateOptions& options = {},
                                   double dt = 0.01);

/// One period of a 2 pi periodic node orbit (w = 0).
struct BaseOrbit {
  Trajectory orbit;
  double period = 0.0;
  Eigen::VectorXd at(double t) const;  // periodic extension
};

/// Integrates the uncoupled node from u0 (assumed on its cycle) and measures
/// the return time to the normal section through u0.  Throws
/// std::runtime_error when it differs from 2 pi by more than `period_tol`.
BaseOrbit base_orbit(const NodeDynamics& node, const Eigen::VectorXd& u0,
                     const IntegrateOptions& options = {},
                     double period_tol = 1e-8);

/// u^phi(t) = (u_j(t + phi_j)) with u_{-j} = -u_j.
class PhaseTorusOrbit {
 public:
  PhaseTorusOrbit(OctahedralGraph graph, std::vector<BaseOrbit> base,
                  std::vector<double> phases);
  State at(double t) const;
  const std::vector<double>& phases() const { return phases_; }
  const OctahedralGraph& graph() const { return graph_; }

 private:
  OctahedralGraph graph_;
  std::vector<BaseOrbit> base_;
  std::vector<double> phases_;
};

/// Validates the base periods (2 pi within 1e-8) and assembles the orbit.
PhaseTorusOrbit phase_torus_orbit(const OctahedralGraph& graph,
                                  std::vector<BaseOrbit> base_orbits,
                                  std::vector<double> phases);

/// max over samples of |d/dt u^phi - F(u^phi)|, derivative by a five-point
/// stencil on the assembled path.
double phase_torus_residual(const FamilySpec& network,
                            const PhaseTorusOrbit& orbit, int samples = 64);

/// Section "second component of vertex +(m+1) = 0, increasing".
EventSpec phase_section(const OctahedralGraph& graph, int node_dim);

/// |P(x) - x| for the point of u^phi on phase_section.
double fixed_point_residual(const FamilySpec& network,
                            const PhaseTorusOrbit& orbit, int node_dim,
                            const IntegrateOptions& options = {});

}  // namespace bwp

#pragma once

// Failure of normal hyperbolicity along the equilibrium manifold.

#include "bwp/integrate.hpp"
#include "bwp/systems.hpp"

#include <complex>
#include <string_view>
#include <vector>

namespace bwp {

using Complex = std::complex<double>;

enum class BifurcationKind { TransverseZero, Hopf, TakensBogdanov };
enum class HopfSubtype { Elliptic, Hyperbolic, Undetermined };

std::string_view kind_name(BifurcationKind k);
std::string_view subtype_name(HopfSubtype s);

struct TransverseSpectrum {
  std::vector<Complex> eigenvalues;  // sorted by (real, imag)
  /// Some transverse eigenvalue is (numerically) zero, i.e. coincides with
  /// the tangential zeros of the full Jacobian.
  bool zero_flag = false;
};

/// On the manifold the Jacobian columns along the manifold axes vanish, so
/// the full spectrum is that of the transverse block plus k zeros.  The
/// block is diagonalised directly.  Throws std::invalid_argument when the
/// point is not an equilibrium of the declared manifold.
TransverseSpectrum transverse_spectrum(const FamilySpec& spec,
                                       std::span<const double> y);
TransverseSpectrum transverse_spectrum(const FamilySpec& spec, double y);

struct BifurcationPoint {
  Eigen::VectorXd y_star;  // one entry, or two for plane scans
  BifurcationKind kind = BifurcationKind::TransverseZero;
  HopfSubtype subtype = HopfSubtype::Undetermined;
  std::vector<Complex> eigenvalues;
};

struct ScanOptions {
  int n_samples = 1024;
  double loc_tol = 1e-10;
  /// Pairs with |imag| below this are treated as real.
  double imag_tol = 1e-10;
  /// Takens-Bogdanov test: the two eigenvalues nearest zero must have sum
  /// and product below this (relative to the spectral scale).
  double double_zero_tol = 1e-8;
};

/// Chebyshev-clustered samples of [lo, hi].
std::vector<double> chebyshev_samples(double lo, double hi, int n);

/// Sign changes of det(transverse block) (a real eigenvalue through zero)
/// and of the real part of the complex pair closest to the imaginary axis
/// (Hopf), each bisected to `loc_tol`.  Requires manifold_dim() == 1.
std::vector<BifurcationPoint> scan_manifold(const FamilySpec& spec, double lo,
                                            double hi,
                                            const ScanOptions& opt = {});

/// tb-2.4 on the plane (y, lambda): a manifold scan in y for every lambda of
/// an n_lambda grid.  Points carry y_star = (y, lambda).
std::vector<BifurcationPoint> scan_plane_tb24(const FamilySpec& spec,
                                              double y_lo, double y_hi,
                                              double lambda_lo,
                                              double lambda_hi, int n_lambda,
                                              const ScanOptions& opt = {});

/// Parameter criterion: sign of y' = -+x^2 (reflect-2.2, hopf-2.3); the b
/// ranges of tb-2.4; the sign of a (a - b) for rev-tb-2.5.  Throws
/// std::invalid_argument for other families.
HopfSubtype hopf_type(FamilyId family, const Params& params);

struct DynamicCheckOptions {
  double probe_radius = 0.05;
  double t_max = 5000.0;
  IntegrateOptions integrate;
};

struct DynamicCheckReport {
  HopfSubtype subtype = HopfSubtype::Undetermined;
  double forward_time = 0.0, backward_time = 0.0;
  double forward_y = 0.0, backward_y = 0.0;  // manifold coordinate at the ends
  IntegrationStatus forward_status = IntegrationStatus::Completed;
  IntegrationStatus backward_status = IntegrationStatus::Completed;
};

/// Starts at the manifold point y* displaced by the probe radius along the
/// first transverse axis and integrates both ways until the transverse
/// distance falls below rho/10 or exceeds 10 rho.  Elliptic: both ends land
/// back on the manifold, on opposite sides of y*.  Hyperbolic: an end
/// escapes.  Otherwise undetermined.
DynamicCheckReport dynamic_type_check(const FamilySpec& spec, double y_star,
                                      const DynamicCheckOptions& opt = {});

}  // namespace bwp

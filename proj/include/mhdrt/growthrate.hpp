#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mhdrt/forms.hpp"
#include "mhdrt/spectrum.hpp"

namespace mhdrt {

/// Result of the per-mode fixed-point construction s = lambda(s).
struct FixedPointResult {
  enum class Status { stable, unstable };

  Eigen::Vector2d k = Eigen::Vector2d::Zero();
  Status status = Status::stable;
  double lambda = 0.0;  // growth rate; 0 when stable
  double s_star = 0.0;  // the fixed point; equals lambda when unstable
  ReducedMode minimizer;  // J-normalized minimizer at s = s_star (unstable only)
  int iterations = 0;     // eigensolve count
  std::pair<double, double> bracket{0.0, 0.0};
  double phi_residual = 0.0;  // |Phi(s_star) - 1|
  std::string note;           // set for degenerate outcomes (k = 0, probe warnings)

  bool unstable() const { return status == Status::unstable; }
};

const char* to_string(FixedPointResult::Status s);

/// Solves Phi(s) = s / sqrt(-alpha(s, k)) = 1 by monotone bisection. Modes
/// with alpha(s, k) >= 0 throughout the probe range are stable with lambda 0;
/// k = 0 is stable by the divergence constraint (w3 of a k = 0 mode has no
/// interface freedom, so the surface term cannot act).
FixedPointResult fixed_point(const FluidParams& params, const MagneticField& field,
                             const Eigen::Vector2d& k, const TwoLayerGrid& grid,
                             double tol = 1e-10);

/// Independent residual of the quadratic eigenvalue pencil
/// (lambda^2 J2 + lambda A1 + A0) x with J2, A1, A0 twice the Hessians of J,
/// E1, E0. Scaled by the Frobenius norm of the pencil so the value is
/// dimensionless.
double quadratic_pencil_check(const FluidParams& params, const MagneticField& field,
                              const Eigen::Vector2d& k, const TwoLayerGrid& grid,
                              double lambda, const ReducedMode& mode);

/// Largest real part of the spectrum of the linearized evolution operator in
/// reduced coordinates (companion linearization of the quadratic pencil); an
/// independent route to the growth rate.
double evolution_spectral_abscissa(const FluidParams& params, const MagneticField& field,
                                   const Eigen::Vector2d& k, const TwoLayerGrid& grid);

struct DispersionRow {
  FixedPointResult result;
  std::string error;  // nonempty when the per-mode solve failed
};

struct DispersionCurve {
  std::vector<DispersionRow> samples;
  double lambda_max = 0.0;
  Eigen::Vector2d k_argmax = Eigen::Vector2d::Zero();
};

/// Fixed point per wavevector; individual failures are recorded per row and
/// the scan continues. Rows keep the order of k_grid regardless of threading.
DispersionCurve dispersion(const FluidParams& params, const MagneticField& field,
                           const std::vector<Eigen::Vector2d>& k_grid,
                           const TwoLayerGrid& grid, int threads = 0,
                           double tol = 1e-10);

struct StabilityMapRow {
  double b3 = 0.0;
  double lambda_max = 0.0;
  Eigen::Vector2d k_argmax = Eigen::Vector2d::Zero();
  std::string regime;
};

struct StabilityMap {
  std::vector<StabilityMapRow> rows;  // sorted by b3
};

StabilityMap stability_map(const FluidParams& params, const Eigen::Vector2d& horizontal,
                           const std::vector<double>& b3_values,
                           const std::vector<Eigen::Vector2d>& k_grid,
                           const TwoLayerGrid& grid, double classify_tol = 1e-9,
                           int threads = 0, double tol = 1e-10);

struct CriticalFieldEstimate {
  double value = 0.0;    // smallest field magnitude with lambda_max < lambda_tol
  double k_max = 0.0;    // largest |k| the scan could see
  int k_count = 0;
  double lambda_tol = 0.0;
  double bisect_rel_tol = 0.0;
};

/// Bisection over the field magnitude along `direction` (unit vector with
/// nonzero vertical component). A magnitude counts as unstable when some k on
/// the log grid has lambda*(k) >= lambda_tol, i.e. alpha(lambda_tol, k)
/// <= -lambda_tol^2 by the monotonicity of Phi. The k grid is log-spaced in
/// [0.1, k_max] along the direction perpendicular to the horizontal field.
CriticalFieldEstimate critical_field_estimate(const FluidParams& params,
                                              const Eigen::Vector3d& direction, double k_max,
                                              const TwoLayerGrid& grid, double lambda_tol = 1e-6,
                                              int k_count = 40, int threads = 0);

/// Helper: log- or linearly-spaced wavevector magnitudes along a direction.
std::vector<Eigen::Vector2d> make_k_grid(double k_min, double k_max, int count, bool log_spaced,
                                         const Eigen::Vector2d& direction);

}  // namespace mhdrt

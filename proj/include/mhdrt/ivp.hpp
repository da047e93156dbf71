#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mhdrt/forms.hpp"
#include "mhdrt/growthrate.hpp"

namespace mhdrt {

/// State of the linearized evolution per mode, in reduced coordinates.
struct ModeState {
  Eigen::VectorXcd eta;  // displacement profile coordinates
  Eigen::VectorXcd u;    // velocity profile coordinates
  double t = 0.0;
};

struct LedgerRow {
  double t = 0.0;
  double kinetic = 0.0;                // (1/2) Int rho |u|^2
  double magnetic = 0.0;               // (1/2) Int |(B.grad) eta|^2
  double surface = 0.0;                // (1/2) [rho] g |eta3(0)|^2
  double dissipation_integral = 0.0;   // running Int_0^t Int (mu/2) |D u|^2
  double u_norm = 0.0;                 // sqrt(Int rho |u|^2)
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;
};

struct EvolveResult {
  std::vector<ModeState> states;
  EnergyLedger ledger;
};

/// Crank-Nicolson integrator for eta' = u, J2 u' = -A0 eta - A1 u with
/// J2, A1, A0 twice the Hessians of J, E1, E0. The trapezoidal update makes
/// the discrete energy identity hold exactly at midpoints:
///   E(z_{n+1}) - E(z_n) = -dt * u_mid^H A1 u_mid,  E = kinetic + magnetic - surface.
class ModeEvolver {
 public:
  ModeEvolver(const QuadForms& forms, double dt);

  ModeState advance(const ModeState& state) const;
  ModeState advance(const ModeState& state, const Eigen::VectorXcd& forcing_mid) const;

  double kinetic(const Eigen::VectorXcd& u) const;
  double magnetic(const Eigen::VectorXcd& eta) const;
  double surface(const Eigen::VectorXcd& eta) const;
  double dissipation_rate(const Eigen::VectorXcd& u_mid) const;
  double dt() const { return dt_; }
  int dof() const { return static_cast<int>(j2_.rows()); }

 private:
  Eigen::MatrixXcd j2_, a1_, a0_, mag_, sur_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;   // of (M - dt/2 K)
  Eigen::MatrixXcd rhs_;                        // (M + dt/2 K)
  double dt_ = 0.0;
};

/// One Crank-Nicolson step (convenience wrapper; assembles the operator).
ModeState step(const FluidParams& params, const MagneticField& field, const Eigen::Vector2d& k,
               const TwoLayerGrid& grid, const ModeState& state, double dt);

/// Integrates over [state0.t, state0.t + T] and records the ledger per step.
EvolveResult evolve(const FluidParams& params, const MagneticField& field,
                    const Eigen::Vector2d& k, const TwoLayerGrid& grid, const ModeState& state0,
                    double T, double dt);

EvolveResult evolve(const QuadForms& forms, const ModeState& state0, double T, double dt);

/// Growing-mode initial data (eta, u) = (w, lambda w) from a fixed point.
ModeState growing_mode_state(const QuadForms& forms, const FixedPointResult& fp);

struct GrowthFit {
  double fitted_rate = 0.0;
  double r2 = 0.0;
};

/// Least-squares slope of log ||u(t)|| over the last half of the trajectory.
GrowthFit growth_fit(const EnergyLedger& ledger);

struct ForcedGrowthReport {
  double lambda = 0.0;            // rate used in the e^{-lambda t} scaling
  double sup_scaled_norm = 0.0;   // sup_t e^{-lambda t} ||u(t)||
  double sup_scaled_norm_refined = 0.0;  // same at dt/2
  double refinement_drift = 0.0;  // relative change under dt -> dt/2
  double forcing_sup = 0.0;       // sup_t ||f(t)||
  double forcing_rate_sup = 0.0;  // sup_t ||f'(t)|| (finite differences)
};

/// Integrates the inhomogeneous system (forcing added to the momentum row)
/// and reports the scaled growth sup together with the forcing norms.
ForcedGrowthReport forced_growth_check(const FluidParams& params, const MagneticField& field,
                                       const Eigen::Vector2d& k, const TwoLayerGrid& grid,
                                       const std::function<Eigen::VectorXcd(double)>& forcing,
                                       double T, double dt);

}  // namespace mhdrt

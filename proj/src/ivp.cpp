#include "mhdrt/ivp.hpp"

#include <cmath>
#include <stdexcept>

#include "quadforms_cache.hpp"

namespace mhdrt {

using cxd = std::complex<double>;

ModeEvolver::ModeEvolver(const QuadForms& forms, double dt) : dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("ModeEvolver: dt must be finite and positive");
  }
  j2_ = 2.0 * forms.J;
  a1_ = 2.0 * forms.E1;
  a0_ = 2.0 * forms.E0;
  mag_ = forms.cache->Mag;
  sur_ = forms.cache->Sur;

  const int d = static_cast<int>(j2_.rows());
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  M.topLeftCorner(d, d) = Eigen::MatrixXcd::Identity(d, d);
  M.bottomRightCorner(d, d) = j2_;
  Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  K.topRightCorner(d, d) = Eigen::MatrixXcd::Identity(d, d);
  K.bottomLeftCorner(d, d) = -a0_;
  K.bottomRightCorner(d, d) = -a1_;

  rhs_ = M + (dt / 2.0) * K;
  lu_.compute(M - (dt / 2.0) * K);
}

ModeState ModeEvolver::advance(const ModeState& state) const {
  const int d = dof();
  Eigen::VectorXcd z(2 * d);
  z.head(d) = state.eta;
  z.tail(d) = state.u;
  const Eigen::VectorXcd znew = lu_.solve(rhs_ * z);
  ModeState out;
  out.eta = znew.head(d);
  out.u = znew.tail(d);
  out.t = state.t + dt_;
  return out;
}

ModeState ModeEvolver::advance(const ModeState& state, const Eigen::VectorXcd& forcing_mid) const {
  const int d = dof();
  if (forcing_mid.size() != d) {
    throw std::invalid_argument("ModeEvolver: forcing length does not match state");
  }
  Eigen::VectorXcd z(2 * d);
  z.head(d) = state.eta;
  z.tail(d) = state.u;
  Eigen::VectorXcd rhs = rhs_ * z;
  rhs.tail(d) += dt_ * forcing_mid;
  const Eigen::VectorXcd znew = lu_.solve(rhs);
  ModeState out;
  out.eta = znew.head(d);
  out.u = znew.tail(d);
  out.t = state.t + dt_;
  return out;
}

double ModeEvolver::kinetic(const Eigen::VectorXcd& u) const {
  return 0.5 * std::real(u.dot(j2_ * u));
}
double ModeEvolver::magnetic(const Eigen::VectorXcd& eta) const {
  return std::real(eta.dot(mag_ * eta));
}
double ModeEvolver::surface(const Eigen::VectorXcd& eta) const {
  return std::real(eta.dot(sur_ * eta));
}
double ModeEvolver::dissipation_rate(const Eigen::VectorXcd& u_mid) const {
  return std::real(u_mid.dot(a1_ * u_mid));
}

ModeState step(const FluidParams& params, const MagneticField& field, const Eigen::Vector2d& k,
               const TwoLayerGrid& grid, const ModeState& state, double dt) {
  const QuadForms forms = assemble_forms(params, field, k, grid);
  return ModeEvolver(forms, dt).advance(state);
}

namespace {

LedgerRow make_row(const ModeEvolver& ev, const ModeState& s, double dissipation_integral) {
  LedgerRow row;
  row.t = s.t;
  row.kinetic = ev.kinetic(s.u);
  row.magnetic = ev.magnetic(s.eta);
  row.surface = ev.surface(s.eta);
  row.dissipation_integral = dissipation_integral;
  row.u_norm = std::sqrt(std::max(2.0 * row.kinetic, 0.0));
  return row;
}

}  // namespace

EvolveResult evolve(const QuadForms& forms, const ModeState& state0, double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0) || dt > T) {
    throw std::invalid_argument("evolve: need 0 < dt <= T");
  }
  const ModeEvolver ev(forms, dt);
  const int nsteps = static_cast<int>(std::llround(T / dt));

  EvolveResult out;
  out.states.reserve(nsteps + 1);
  out.ledger.rows.reserve(nsteps + 1);

  ModeState s = state0;
  double dissipated = 0.0;
  out.states.push_back(s);
  out.ledger.rows.push_back(make_row(ev, s, dissipated));
  for (int i = 0; i < nsteps; ++i) {
    const ModeState snext = ev.advance(s);
    const Eigen::VectorXcd u_mid = 0.5 * (s.u + snext.u);
    dissipated += dt * ev.dissipation_rate(u_mid);
    s = snext;
    out.states.push_back(s);
    out.ledger.rows.push_back(make_row(ev, s, dissipated));
  }
  return out;
}

EvolveResult evolve(const FluidParams& params, const MagneticField& field,
                    const Eigen::Vector2d& k, const TwoLayerGrid& grid, const ModeState& state0,
                    double T, double dt) {
  return evolve(assemble_forms(params, field, k, grid), state0, T, dt);
}

ModeState growing_mode_state(const QuadForms& forms, const FixedPointResult& fp) {
  if (!fp.unstable()) {
    throw std::invalid_argument("growing_mode_state: fixed point is stable");
  }
  ModeState s;
  s.eta = forms.basis.to_coords(fp.minimizer);
  s.u = fp.lambda * s.eta;
  s.t = 0.0;
  return s;
}

GrowthFit growth_fit(const EnergyLedger& ledger) {
  const auto& rows = ledger.rows;
  if (rows.size() < 10) {
    throw std::invalid_argument("growth_fit: need at least 10 samples");
  }
  const std::size_t start = rows.size() / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(rows.size() - start);
  for (std::size_t i = start; i < rows.size(); ++i) {
    if (!(rows[i].u_norm > 0.0)) {
      throw std::invalid_argument("growth_fit: nonpositive norm in the fit window");
    }
    const double x = rows[i].t;
    const double y = std::log(rows[i].u_norm);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  GrowthFit fit;
  fit.fitted_rate = vxy / vxx;
  fit.r2 = vyy > 0.0 ? (vxy * vxy) / (vxx * vyy) : 1.0;
  return fit;
}

ForcedGrowthReport forced_growth_check(const FluidParams& params, const MagneticField& field,
                                       const Eigen::Vector2d& k, const TwoLayerGrid& grid,
                                       const std::function<Eigen::VectorXcd(double)>& forcing,
                                       double T, double dt) {
  if (!(T > 0.0) || !(dt > 0.0) || dt > T) {
    throw std::invalid_argument("forced_growth_check: need 0 < dt <= T");
  }
  const QuadForms forms = assemble_forms(params, field, k, grid);
  const FixedPointResult fp = fixed_point(params, field, k, grid);
  const double lambda = fp.unstable() ? fp.lambda : 0.0;

  ForcedGrowthReport report;
  report.lambda = lambda;

  auto run = [&](double step_size) {
    const ModeEvolver ev(forms, step_size);
    const int nsteps = static_cast<int>(std::llround(T / step_size));
    ModeState s;
    s.eta = Eigen::VectorXcd::Zero(ev.dof());
    s.u = Eigen::VectorXcd::Zero(ev.dof());
    double sup = std::sqrt(2.0 * ev.kinetic(s.u));  // t = 0 contribution
    for (int i = 0; i < nsteps; ++i) {
      const double tmid = s.t + 0.5 * step_size;
      const Eigen::VectorXcd f = forcing(tmid);
      if (f.size() != ev.dof() || !f.allFinite()) {
        throw std::invalid_argument("forced_growth_check: forcing sample unbounded or mis-sized");
      }
      report.forcing_sup = std::max(report.forcing_sup, f.norm());
      s = ev.advance(s, f);
      const double scaled = std::exp(-lambda * s.t) * std::sqrt(2.0 * ev.kinetic(s.u));
      sup = std::max(sup, scaled);
    }
    return sup;
  };

  report.sup_scaled_norm = run(dt);
  report.sup_scaled_norm_refined = run(dt / 2.0);
  const double base = std::max(std::abs(report.sup_scaled_norm), 1e-300);
  report.refinement_drift =
      std::abs(report.sup_scaled_norm - report.sup_scaled_norm_refined) / base;

  // sup ||f'|| via central differences on the dt grid
  double sup_rate = 0.0;
  const int nsteps = static_cast<int>(std::llround(T / dt));
  for (int i = 1; i < nsteps; ++i) {
    const double t = i * dt;
    sup_rate = std::max(sup_rate,
                        (forcing(t + 0.5 * dt) - forcing(t - 0.5 * dt)).norm() / dt);
  }
  report.forcing_rate_sup = sup_rate;
  return report;
}

}  // namespace mhdrt

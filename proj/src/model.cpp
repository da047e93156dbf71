#include "mhdrt/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mhdrt {

void FluidParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string("FluidParams: ") + name + " must be finite and > 0");
    }
  };
  positive(rho_plus, "rho_plus");
  positive(rho_minus, "rho_minus");
  positive(mu_plus, "mu_plus");
  positive(mu_minus, "mu_minus");
  positive(g, "g");
  positive(ell, "ell");
  positive(m, "m");
  if (!(rho_plus > rho_minus)) {
    throw std::invalid_argument(
        "FluidParams: rho_plus must exceed rho_minus (positive density jump)");
  }
}

const char* to_string(Regime r) {
  switch (r) {
    case Regime::subcritical: return "subcritical";
    case Regime::critical: return "critical";
    case Regime::supercritical: return "supercritical";
  }
  return "unknown";
}

double critical_field(const FluidParams& params) {
  if (!(params.ell > 0.0) || !(params.m > 0.0) || !(params.g > 0.0)) {
    throw std::invalid_argument("critical_field: depths and gravity must be positive");
  }
  const double jump = params.density_jump();
  if (jump < 0.0) {
    throw std::invalid_argument("critical_field: density jump must be nonnegative");
  }
  return std::sqrt(jump * params.g / (1.0 / params.ell + 1.0 / params.m));
}

RegimeLabel classify_regime(const FluidParams& params, const MagneticField& field, double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("classify_regime: tol must be positive");
  }
  const double mc = critical_field(params);
  RegimeLabel out;
  out.margin = std::abs(field.vertical()) - mc;
  if (out.margin < -tol) {
    out.regime = Regime::subcritical;
  } else if (out.margin > tol) {
    out.regime = Regime::supercritical;
  } else {
    out.regime = Regime::critical;
  }
  return out;
}

Canonicalized canonicalize(const MagneticField& field, const Eigen::Vector2d& k) {
  Canonicalized out;
  const Eigen::Vector2d bstar = field.horizontal();
  const double norm = bstar.norm();
  if (norm == 0.0) {
    out.rotation = Eigen::Matrix2d::Identity();
    out.field = field;
    out.k = k;
    return out;
  }
  const Eigen::Vector2d u = bstar / norm;
  // R maps e1 to u; then R^T B* = (|B*|, 0).
  out.rotation << u[0], -u[1], u[1], u[0];
  out.field.b << norm, 0.0, field.vertical();
  out.k = out.rotation.transpose() * k;
  return out;
}

}  // namespace mhdrt

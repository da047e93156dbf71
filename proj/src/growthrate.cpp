#include "mhdrt/growthrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mhdrt/parallel.hpp"
#include "quadforms_cache.hpp"

namespace mhdrt {

using cxd = std::complex<double>;

const char* to_string(FixedPointResult::Status s) {
  return s == FixedPointResult::Status::unstable ? "unstable" : "stable";
}

namespace {

constexpr double kProbeFloor = 1e-8;

/// Rayleigh-quotient iteration on the quadratic pencil in long double. The
/// double-precision eigensolve cannot place alpha more accurately than
/// eps * ||pencil||, which at stiff wavevectors leaves |Phi - 1| stuck around
/// 1e-9; this polish reaches the 1e-10 contract.
struct PolishOutcome {
  double lambda = 0.0;
  double phi_residual = 0.0;
  ReducedMode minimizer;
  int iterations = 0;
};

PolishOutcome polish_fixed_point(const QuadForms& forms, double s_seed,
                                 const ReducedMode& seed_mode) {
  using Real = long double;
  using CL = std::complex<Real>;
  using MatL = detail::MatC<Real>;
  using VecL = detail::VecC<Real>;

  const auto& ker = detail::ld_kernel(forms);
  const auto fs = detail::assemble_form_set<Real>(ker, forms.params, forms.field);
  const int d = ker.ops.dof();

  VecL c(d);
  c.head(ker.ops.dw) =
      ker.ops.Zw.template cast<CL>().transpose() * seed_mode.w3.cast<CL>();
  c.tail(ker.ops.db) =
      ker.ops.Zb.template cast<CL>().transpose() * seed_mode.b.cast<CL>();
  auto jnorm = [&](const VecL& v) {
    return std::sqrt(std::abs((v.adjoint() * (fs.J * v))(0, 0)));
  };
  const Real seed_norm = jnorm(c);
  if (!(seed_norm > Real(0))) {
    throw std::runtime_error("fixed_point: polish seed is not in the admissible basis");
  }
  c /= seed_norm;

  Real lam = static_cast<Real>(s_seed);
  PolishOutcome out;
  auto rayleigh = [&](const VecL& v, Real& a, Real& b, Real& dd) {
    a = std::real((v.adjoint() * (fs.J * v))(0, 0));
    b = std::real((v.adjoint() * (fs.E1 * v))(0, 0));
    dd = std::real((v.adjoint() * (fs.E0 * v))(0, 0));
  };
  for (int it = 0; it < 50; ++it) {
    ++out.iterations;
    const MatL P = lam * lam * fs.J + lam * fs.E1 + fs.E0;
    Eigen::PartialPivLU<MatL> lu(P);
    VecL next = lu.solve(fs.J * c);
    const Real nn = jnorm(next);
    if (nn > Real(0) && next.allFinite()) c = next / nn;
    Real a, b, dd;
    rayleigh(c, a, b, dd);
    const Real disc = b * b - Real(4) * a * dd;
    if (!(disc >= Real(0)) || !(a > Real(0))) break;
    const Real lnew = (-b + std::sqrt(disc)) / (Real(2) * a);
    const Real dl = std::abs(lnew - lam);
    lam = lnew;
    if (dl <= Real(1e-17L) * lam) break;
  }
  if (!(lam > Real(0)) || std::abs(lam - Real(s_seed)) > Real(0.5) * Real(s_seed)) {
    throw std::runtime_error("fixed_point: polish left the seed's basin");
  }

  Real a, b, dd;
  rayleigh(c, a, b, dd);
  const Real alpha_rq = (dd + lam * b) / a;
  if (!(alpha_rq < Real(0))) {
    throw std::runtime_error("fixed_point: polished Rayleigh quotient is not negative");
  }
  out.lambda = static_cast<double>(lam);
  out.phi_residual = std::abs(static_cast<double>(lam / std::sqrt(-alpha_rq) - Real(1)));

  ReducedMode mode;
  mode.k = forms.basis.k;
  const VecL w3 = ker.ops.Zw.template cast<CL>() * c.head(ker.ops.dw);
  const VecL bb = ker.ops.Zb.template cast<CL>() * c.tail(ker.ops.db);
  mode.w3 = w3.unaryExpr([](CL z) {
    return cxd(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  });
  mode.b = bb.unaryExpr([](CL z) {
    return cxd(static_cast<double>(z.real()), static_cast<double>(z.imag()));
  });
  out.minimizer = mode;
  return out;
}

FixedPointResult fixed_point_on_forms(const QuadForms& forms, const Eigen::Vector2d& k,
                                      double tol) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("fixed_point: tol must be positive");
  }
  FixedPointResult out;
  out.k = k;
  int evals = 0;
  auto alpha_at = [&](double s) {
    ++evals;
    return alpha(forms, s);
  };

  // Phi(s) = s / sqrt(-alpha(s)); alpha(s0) >= -s0^2 puts the fixed point at
  // or below the probe floor, which we report as stable.
  AlphaResult a0 = alpha_at(kProbeFloor);
  if (a0.alpha >= -kProbeFloor * kProbeFloor) {
    out.status = FixedPointResult::Status::stable;
    out.iterations = evals;
    if (a0.alpha < 0.0) {
      out.note = "alpha < 0 at the probe floor; growth rate below 1e-8";
    }
    return out;
  }

  // Geometric sweep for the bracket: lo has Phi < 1, hi has Phi > 1 (alpha >= 0
  // counts as Phi = +inf).
  double lo = kProbeFloor;
  double hi = kProbeFloor;
  bool bracketed = false;
  for (int j = 0; j < 100 && !bracketed; ++j) {
    hi *= 2.0;
    const AlphaResult ah = alpha_at(hi);
    if (ah.alpha >= 0.0 || hi / std::sqrt(-ah.alpha) > 1.0) {
      bracketed = true;
    } else {
      lo = hi;
    }
  }
  if (!bracketed) {
    out.status = FixedPointResult::Status::stable;
    out.iterations = evals;
    out.note = "no bracket: Phi stayed below 1 over the probe range";
    return out;
  }
  out.bracket = {lo, hi};

  double best_res = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  AlphaResult best_alpha;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const AlphaResult am = alpha_at(mid);
    const bool negative = am.alpha < 0.0;
    const double phi =
        negative ? mid / std::sqrt(-am.alpha) : std::numeric_limits<double>::infinity();
    if (negative && std::abs(phi - 1.0) < best_res) {
      best_res = std::abs(phi - 1.0);
      best_s = mid;
      best_alpha = am;
    }
    if (negative && std::abs(phi - 1.0) < tol) break;
    if (phi > 1.0) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= 64.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  if (!(best_res < std::numeric_limits<double>::infinity()) || best_s <= 0.0) {
    std::ostringstream msg;
    msg << "fixed_point: bisection found no usable iterate in bracket [" << out.bracket.first
        << ", " << out.bracket.second << "]";
    throw std::runtime_error(msg.str());
  }

  out.status = FixedPointResult::Status::unstable;
  out.lambda = best_s;
  out.s_star = best_s;  // the defining identity s* = lambda(s*)
  out.minimizer = best_alpha.minimizer;
  out.phi_residual = best_res;
  out.iterations = evals;

  if (best_res >= tol) {
    // The double-precision pencil has hit its eigenvalue floor; polish in
    // extended precision.
    const PolishOutcome polished = polish_fixed_point(forms, best_s, best_alpha.minimizer);
    if (!(polished.phi_residual < tol)) {
      std::ostringstream msg;
      msg << "fixed_point: |Phi - 1| = " << polished.phi_residual << " after polish (target "
          << tol << ", bracket [" << out.bracket.first << ", " << out.bracket.second << "])";
      throw std::runtime_error(msg.str());
    }
    out.lambda = polished.lambda;
    out.s_star = polished.lambda;
    out.phi_residual = polished.phi_residual;
    out.iterations = evals + polished.iterations;

    Eigen::VectorXcd coords = forms.basis.to_coords(polished.minimizer);
    const double jn = std::sqrt(std::real(coords.dot(forms.J * coords)));
    coords /= jn;
    // branch guard: the polished minimizer must stay in the seed's eigenspace
    const Eigen::VectorXcd seed = forms.basis.to_coords(best_alpha.minimizer);
    const double overlap = std::abs(coords.dot(forms.J * seed));
    if (overlap < 0.9) {
      throw std::runtime_error("fixed_point: polish left the seed eigenvector branch");
    }
    int bestidx = 0;
    double mag = -1.0;
    for (int i = 0; i < coords.size(); ++i) {
      if (std::abs(coords[i]) > mag + 1e-15 * mag) {
        mag = std::abs(coords[i]);
        bestidx = i;
      }
    }
    coords *= std::conj(coords[bestidx]) / mag;
    out.minimizer = forms.basis.from_coords(coords);
  }
  return out;
}

Eigen::Vector2d perp_direction(const Eigen::Vector2d& horizontal) {
  const double n = horizontal.norm();
  if (n == 0.0) return Eigen::Vector2d(1.0, 0.0);
  return Eigen::Vector2d(-horizontal[1], horizontal[0]) / n;
}

}  // namespace

FixedPointResult fixed_point(const FluidParams& params, const MagneticField& field,
                             const Eigen::Vector2d& k, const TwoLayerGrid& grid, double tol) {
  if (k.norm() == 0.0) {
    FixedPointResult out;
    out.note = "k = 0: stable by the divergence constraint";
    return out;
  }
  const QuadForms forms = assemble_forms(params, field, k, grid);
  return fixed_point_on_forms(forms, k, tol);
}

double quadratic_pencil_check(const FluidParams& params, const MagneticField& field,
                              const Eigen::Vector2d& k, const TwoLayerGrid& grid, double lambda,
                              const ReducedMode& mode) {
  const QuadForms forms = assemble_forms(params, field, k, grid);
  const Eigen::VectorXcd c = forms.basis.to_coords(mode);
  const double cn = c.norm();
  if (cn == 0.0) return 0.0;
  const Eigen::MatrixXcd P =
      2.0 * (lambda * lambda * forms.J + lambda * forms.E1 + forms.E0);
  // ||(lambda^2 J2 + lambda A1 + A0) x|| / ||x||; the J-normalization of the
  // mode fixes the overall scale
  return (P * c).norm() / cn;
}

double evolution_spectral_abscissa(const FluidParams& params, const MagneticField& field,
                                   const Eigen::Vector2d& k, const TwoLayerGrid& grid) {
  const QuadForms forms = assemble_forms(params, field, k, grid);
  const QuadFormsCache& cache = *forms.cache;
  const int d = static_cast<int>(cache.E0w.rows());
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
  M.topRightCorner(d, d) = Eigen::MatrixXcd::Identity(d, d);
  M.bottomLeftCorner(d, d) = -cache.E0w;
  M.bottomRightCorner(d, d) = -cache.E1w;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("evolution_spectral_abscissa: eigensolve failed");
  }
  return es.eigenvalues().real().maxCoeff();
}

DispersionCurve dispersion(const FluidParams& params, const MagneticField& field,
                           const std::vector<Eigen::Vector2d>& k_grid, const TwoLayerGrid& grid,
                           int threads, double tol) {
  if (k_grid.empty()) {
    throw std::invalid_argument("dispersion: k_grid must be nonempty");
  }
  for (const auto& k : k_grid) {
    if (k.norm() == 0.0) {
      throw std::invalid_argument("dispersion: k = 0 is excluded from scans");
    }
  }
  DispersionCurve curve;
  curve.samples.resize(k_grid.size());
  parallel_for(
      static_cast<int>(k_grid.size()),
      [&](int i) {
        DispersionRow& row = curve.samples[i];
        try {
          row.result = fixed_point(params, field, k_grid[i], grid, tol);
        } catch (const std::exception& e) {
          row.result.k = k_grid[i];
          row.error = e.what();
        }
      },
      threads);

  curve.lambda_max = 0.0;
  for (const auto& row : curve.samples) {
    if (row.error.empty() && row.result.unstable() && row.result.lambda > curve.lambda_max) {
      curve.lambda_max = row.result.lambda;
      curve.k_argmax = row.result.k;
    }
  }
  return curve;
}

StabilityMap stability_map(const FluidParams& params, const Eigen::Vector2d& horizontal,
                           const std::vector<double>& b3_values,
                           const std::vector<Eigen::Vector2d>& k_grid, const TwoLayerGrid& grid,
                           double classify_tol, int threads, double tol) {
  std::vector<double> b3s = b3_values;
  std::sort(b3s.begin(), b3s.end());

  // Per-k assembly is shared across the sweep; only E0 changes with b3.
  std::vector<FormsFactory> factories;
  factories.reserve(k_grid.size());
  for (const auto& k : k_grid) factories.emplace_back(params, k, grid);

  StabilityMap map;
  map.rows.resize(b3s.size());
  parallel_for(
      static_cast<int>(b3s.size()),
      [&](int i) {
        MagneticField field;
        field.b << horizontal[0], horizontal[1], b3s[i];
        StabilityMapRow row;
        row.b3 = b3s[i];
        for (std::size_t j = 0; j < k_grid.size(); ++j) {
          FixedPointResult fp = fixed_point_on_forms(factories[j].make(field), k_grid[j], tol);
          if (fp.unstable() && fp.lambda > row.lambda_max) {
            row.lambda_max = fp.lambda;
            row.k_argmax = fp.k;
          }
        }
        row.regime = to_string(classify_regime(params, field, classify_tol).regime);
        map.rows[i] = row;
      },
      threads);
  return map;
}

std::vector<Eigen::Vector2d> make_k_grid(double k_min, double k_max, int count, bool log_spaced,
                                         const Eigen::Vector2d& direction) {
  if (!(k_min > 0.0) || !(k_max > k_min) || count < 2) {
    throw std::invalid_argument("make_k_grid: need 0 < k_min < k_max and count >= 2");
  }
  const Eigen::Vector2d dir = direction / direction.norm();
  std::vector<Eigen::Vector2d> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    const double kappa =
        log_spaced ? k_min * std::pow(k_max / k_min, t) : k_min + t * (k_max - k_min);
    out.push_back(kappa * dir);
  }
  return out;
}

CriticalFieldEstimate critical_field_estimate(const FluidParams& params,
                                              const Eigen::Vector3d& direction, double k_max,
                                              const TwoLayerGrid& grid, double lambda_tol,
                                              int k_count, int threads) {
  if (std::abs(direction[2]) <= 0.0) {
    throw std::invalid_argument(
        "critical_field_estimate: direction needs a nonzero vertical component");
  }
  const Eigen::Vector3d dir = direction / direction.norm();
  const Eigen::Vector2d kdir = perp_direction(dir.head<2>());
  const auto k_grid = make_k_grid(0.1, k_max, k_count, /*log=*/true, kdir);

  std::vector<FormsFactory> factories;
  factories.reserve(k_grid.size());
  for (const auto& k : k_grid) factories.emplace_back(params, k, grid);

  // lambda*(k) >= lambda_tol iff Phi(lambda_tol) <= 1 iff alpha(lambda_tol, k)
  // <= -lambda_tol^2, by the monotonicity of Phi. Scan from the largest k
  // down, where the instability onset sits.
  auto unstable_at = [&](double magnitude) {
    MagneticField field;
    field.b = magnitude * dir;
    std::atomic<bool> found{false};
    const int n = static_cast<int>(k_grid.size());
    parallel_for(
        n,
        [&](int i) {
          if (found.load()) return;
          const int idx = n - 1 - i;  // descending |k|
          const AlphaResult a = alpha(factories[idx].make(field), lambda_tol);
          if (a.alpha <= -lambda_tol * lambda_tol) found.store(true);
        },
        threads);
    return found.load();
  };

  CriticalFieldEstimate est;
  est.k_max = k_max;
  est.k_count = k_count;
  est.lambda_tol = lambda_tol;
  est.bisect_rel_tol = 1e-3;

  double lo = 0.0;
  if (!unstable_at(0.0)) {
    est.value = 0.0;  // nothing to stabilize on this mode family
    return est;
  }
  double hi = 2.0 * std::sqrt(std::max(params.density_jump() * params.g, 0.0) *
                              std::min(grid.ell(), grid.m()));
  if (!(hi > 0.0)) hi = 1.0;
  int doublings = 0;
  while (unstable_at(hi)) {
    hi *= 2.0;
    if (++doublings > 60) {
      throw std::runtime_error(
          "critical_field_estimate: unstable at all probed magnitudes (no bracket)");
    }
  }
  while (hi - lo > est.bisect_rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (unstable_at(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  est.value = 0.5 * (lo + hi) * std::abs(dir[2]);  // critical |B3|
  return est;
}

}  // namespace mhdrt

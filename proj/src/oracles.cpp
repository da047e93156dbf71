#include "mhdrt/oracles.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace mhdrt {

using cxd = std::complex<double>;

Eigen::VectorXcd psi_profile(const LayerGrid& layer) {
  Eigen::VectorXcd v(layer.count());
  const bool upper = layer.lo == 0.0;
  for (int j = 0; j < layer.count(); ++j) {
    const double x = layer.nodes[j];
    v[j] = upper ? 1.0 - x / layer.hi : 1.0 + x / (-layer.lo);
  }
  return v;
}

namespace {

/// Smooth random function on the two layers, stored as per-layer Chebyshev
/// coefficients so the same sample can be evaluated on any resolution.
struct TwoLayerFn {
  Eigen::VectorXcd cu, cl;  // coefficients; layer mapping from (ell, m)
};

cxd eval_series(const Eigen::VectorXcd& c, double lo, double hi, double x) {
  const double t = 2.0 * (x - lo) / (hi - lo) - 1.0;
  cxd b1 = 0.0, b2 = 0.0;
  for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) {
    const cxd b0 = 2.0 * t * b1 - b2 + c[k];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + c[0];
}

Eigen::VectorXcd derive_series(const Eigen::VectorXcd& c, double length) {
  const int n = static_cast<int>(c.size()) - 1;
  if (n < 1) return Eigen::VectorXcd::Zero(1);
  Eigen::VectorXcd dp = Eigen::VectorXcd::Zero(n + 2);
  for (int k = n; k >= 1; --k) dp[k - 1] = dp[k + 1] + 2.0 * k * c[k];
  dp[0] *= 0.5;
  return dp.head(std::max(n, 1)) * (2.0 / length);
}

struct EndpointData {
  cxd value_lo, value_hi, deriv_lo, deriv_hi;  // physical derivative
};

EndpointData endpoints(const Eigen::VectorXcd& c, double lo, double hi) {
  EndpointData e;
  e.value_lo = eval_series(c, lo, hi, lo);
  e.value_hi = eval_series(c, lo, hi, hi);
  const Eigen::VectorXcd d = derive_series(c, hi - lo);
  e.deriv_lo = eval_series(d, lo, hi, lo);
  e.deriv_hi = eval_series(d, lo, hi, hi);
  return e;
}

/// Adds the cubic (in the mapped variable t) meeting value/derivative
/// corrections at both endpoints; dv/dd are physical-value and
/// physical-derivative corrections at t = -1 and t = +1.
void add_hermite(Eigen::VectorXcd& c, double length, cxd dv_lo, cxd dd_lo, cxd dv_hi, cxd dd_hi) {
  if (c.size() < 4) {
    Eigen::VectorXcd grown = Eigen::VectorXcd::Zero(4);
    grown.head(c.size()) = c;
    c = grown;
  }
  const double half = length / 2.0;  // dt/dx scaling for derivatives
  const cxd A = dv_lo, B = dd_lo * half, C = dv_hi, D = dd_hi * half;
  // p = A h00 + C h01 + B h10 + D h11 in the power basis (1, t, t^2, t^3)
  const cxd p0 = (2.0 * A + 2.0 * C + B - D) / 4.0;
  const cxd p1 = (-3.0 * A + 3.0 * C - B - D) / 4.0;
  const cxd p2 = (-B + D) / 4.0;
  const cxd p3 = (A - C + B + D) / 4.0;
  // power -> Chebyshev: t^2 = (T0 + T2)/2, t^3 = (3 T1 + T3)/4
  c[0] += p0 + p2 / 2.0;
  c[1] += p1 + 3.0 * p3 / 4.0;
  c[2] += p2 / 2.0;
  c[3] += p3 / 4.0;
}

class Sampler {
 public:
  Sampler(std::uint64_t seed, double ell, double m) : rng_(seed), ell_(ell), m_(m) {}

  cxd gauss() { return cxd(normal_(rng_), normal_(rng_)); }

  Eigen::VectorXcd raw_series(int degree, double decay) {
    Eigen::VectorXcd c(degree + 1);
    double w = 1.0;
    for (int j = 0; j <= degree; ++j) {
      c[j] = gauss() * w;
      w *= decay;
    }
    return c;
  }

  /// Scalar H^1_0 sample: zero at the rigid boundaries, continuous at x3 = 0.
  TwoLayerFn scalar_h10(int degree = 14) {
    TwoLayerFn f;
    f.cu = raw_series(degree, 0.65);
    f.cl = raw_series(degree, 0.65);
    const cxd v = gauss();
    // upper layer: t=-1 is the interface, t=+1 the wall
    const EndpointData eu = endpoints(f.cu, 0.0, ell_);
    add_affine(f.cu, v - eu.value_lo, -eu.value_hi);
    const EndpointData el = endpoints(f.cl, -m_, 0.0);
    add_affine(f.cl, -el.value_lo, v - el.value_hi);
    return f;
  }

  /// Clamped sample for w3: value and physical derivative vanish at the walls
  /// and are shared across the interface.
  TwoLayerFn clamped(int degree = 14) {
    TwoLayerFn f;
    f.cu = raw_series(degree, 0.65);
    f.cl = raw_series(degree, 0.65);
    const cxd v = gauss();
    const cxd s = gauss();
    const EndpointData eu = endpoints(f.cu, 0.0, ell_);
    add_hermite(f.cu, ell_, v - eu.value_lo, s - eu.deriv_lo, -eu.value_hi, -eu.deriv_hi);
    const EndpointData el = endpoints(f.cl, -m_, 0.0);
    add_hermite(f.cl, m_, -el.value_lo, -el.deriv_lo, v - el.value_hi, s - el.deriv_hi);
    return f;
  }

 private:
  static void add_affine(Eigen::VectorXcd& c, cxd dv_lo, cxd dv_hi) {
    if (c.size() < 2) {
      Eigen::VectorXcd grown = Eigen::VectorXcd::Zero(2);
      grown.head(c.size()) = c;
      c = grown;
    }
    c[0] += (dv_lo + dv_hi) / 2.0;
    c[1] += (dv_hi - dv_lo) / 2.0;
  }

  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double ell_, m_;
};

Eigen::VectorXcd values_on(const Eigen::VectorXcd& c, const LayerGrid& layer) {
  Eigen::VectorXcd v(layer.count());
  for (int j = 0; j < layer.count(); ++j) v[j] = eval_series(c, layer.lo, layer.hi, layer.nodes[j]);
  return v;
}

struct ScalarQuadrature {
  double norm2 = 0.0;       // Int |f|^2
  double grad_norm2 = 0.0;  // Int |(B.grad) f|^2
  cxd trace = 0.0;          // f(0)
};

ScalarQuadrature scalar_quadrature(const TwoLayerFn& f, const TwoLayerGrid& grid, double beta,
                                   double b3) {
  ScalarQuadrature q;
  auto layer_part = [&](const Eigen::VectorXcd& c, const LayerGrid& layer) {
    const Eigen::VectorXcd v = values_on(c, layer);
    const Eigen::VectorXcd dv = values_on(derive_series(c, layer.length()), layer);
    for (int j = 0; j < layer.count(); ++j) {
      const cxd lf = cxd(0.0, beta) * v[j] + b3 * dv[j];
      q.norm2 += layer.weights[j] * std::norm(v[j]);
      q.grad_norm2 += layer.weights[j] * std::norm(lf);
    }
  };
  layer_part(f.cu, grid.upper);
  layer_part(f.cl, grid.lower);
  q.trace = 0.5 * (eval_series(f.cu, 0.0, grid.ell(), 0.0) +
                   eval_series(f.cl, -grid.m(), 0.0, 0.0));
  return q;
}

TwoLayerGrid refined(const TwoLayerGrid& grid) {
  return build(2 * grid.upper.n, 2 * grid.lower.n, grid.ell(), grid.m());
}

}  // namespace

ConstantEstimate poincare_check(const MagneticField& field, const Eigen::Vector2d& k,
                                const TwoLayerGrid& grid, int n_samples, std::uint64_t seed) {
  const double b3 = field.vertical();
  if (b3 == 0.0) {
    throw std::invalid_argument("poincare_check: B3 must be nonzero");
  }
  if (n_samples < 1) {
    throw std::invalid_argument("poincare_check: need at least one sample");
  }
  const double beta = field.horizontal().dot(k);
  const TwoLayerGrid fine = refined(grid);

  Sampler sampler(seed, grid.ell(), grid.m());
  double best = 0.0, best_fine = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    TwoLayerFn f = sampler.scalar_h10();
    ScalarQuadrature q = scalar_quadrature(f, grid, beta, b3);
    if (!(q.norm2 > 1e-24)) {  // vanishing draw; the ratio is undefined
      --i;
      continue;
    }
    best = std::max(best, q.norm2 / q.grad_norm2);
    const ScalarQuadrature qf = scalar_quadrature(f, fine, beta, b3);
    best_fine = std::max(best_fine, qf.norm2 / qf.grad_norm2);
  }
  ConstantEstimate est;
  est.best_ratio = best;
  est.sample_size = n_samples;
  est.refinement_drift = std::abs(best_fine - best) / std::max(best, 1e-300);
  return est;
}

ConstantEstimate trace_check(const MagneticField& field, const Eigen::Vector2d& k,
                             const TwoLayerGrid& grid, int n_samples, std::uint64_t seed) {
  const double b3 = field.vertical();
  if (b3 == 0.0) {
    throw std::invalid_argument("trace_check: B3 must be nonzero");
  }
  if (n_samples < 1) {
    throw std::invalid_argument("trace_check: need at least one sample");
  }
  const double beta = field.horizontal().dot(k);
  const TwoLayerGrid fine = refined(grid);

  Sampler sampler(seed, grid.ell(), grid.m());
  auto ratio = [&](const TwoLayerFn& f, const TwoLayerGrid& g) {
    const ScalarQuadrature q = scalar_quadrature(f, g, beta, b3);
    const double denom =
        std::sqrt(q.grad_norm2) * std::sqrt(q.norm2) / std::abs(b3);
    return denom > 0.0 ? std::norm(q.trace) / denom : 0.0;
  };
  double best = 0.0, best_fine = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    TwoLayerFn f = sampler.scalar_h10();
    best = std::max(best, ratio(f, grid));
    best_fine = std::max(best_fine, ratio(f, fine));
  }
  ConstantEstimate est;
  est.best_ratio = best;
  est.sample_size = n_samples;
  est.refinement_drift = std::abs(best_fine - best) / std::max(best, 1e-300);
  return est;
}

ConstantEstimate korn_check(const Eigen::Vector2d& k, const TwoLayerGrid& grid, int n_samples,
                            std::uint64_t seed) {
  if (k.norm() == 0.0) {
    throw std::invalid_argument("korn_check: k must be nonzero");
  }
  if (n_samples < 1) {
    throw std::invalid_argument("korn_check: need at least one sample");
  }
  const TwoLayerGrid fine = refined(grid);
  Sampler sampler(seed, grid.ell(), grid.m());

  auto ratio = [&](const TwoLayerFn& w3fn, const TwoLayerFn& bfn, const TwoLayerGrid& g) {
    ReducedMode mode;
    mode.k = k;
    const int nu = g.upper.count(), nl = g.lower.count();
    mode.w3.resize(nu + nl);
    mode.b.resize(nu + nl);
    mode.w3.head(nu) = values_on(w3fn.cu, g.upper);
    mode.w3.tail(nl) = values_on(w3fn.cl, g.lower);
    mode.b.head(nu) = values_on(bfn.cu, g.upper);
    mode.b.tail(nl) = values_on(bfn.cl, g.lower);
    const VelocityProfile p = lift_velocity(g, mode);

    auto d3 = [&](const Eigen::VectorXcd& v) {
      Eigen::VectorXcd out(nu + nl);
      out.head(nu) = g.upper.diff.cast<cxd>() * v.head(nu);
      out.tail(nl) = g.lower.diff.cast<cxd>() * v.tail(nl);
      return out;
    };
    Eigen::VectorXd wq(nu + nl);
    for (int j = 0; j < nu + nl; ++j) {
      wq[j] = j < nu ? g.upper.weights[j] : g.lower.weights[j - nu];
    }
    const Eigen::VectorXcd comp[3] = {p.u1, p.u2, p.u3};
    Eigen::VectorXcd dcomp[3];
    for (int c = 0; c < 3; ++c) dcomp[c] = d3(comp[c]);
    auto partial = [&](int dir, int c) -> Eigen::VectorXcd {
      if (dir == 0) return cxd(0.0, k[0]) * comp[c];
      if (dir == 1) return cxd(0.0, k[1]) * comp[c];
      return dcomp[c];
    };
    double h1 = 0.0, dn = 0.0;
    for (int c = 0; c < 3; ++c) {
      h1 += (wq.array() * comp[c].array().abs2()).sum();
      for (int dir = 0; dir < 3; ++dir) {
        h1 += (wq.array() * partial(dir, c).array().abs2()).sum();
      }
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const Eigen::VectorXcd dij = partial(j, i) + partial(i, j);
        dn += (i == j ? 1.0 : 2.0) * (wq.array() * dij.array().abs2()).sum();
      }
    }
    return dn > 0.0 ? h1 / dn : 0.0;
  };

  double best = 0.0, best_fine = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const TwoLayerFn w3fn = sampler.clamped();
    const TwoLayerFn bfn = sampler.scalar_h10();
    best = std::max(best, ratio(w3fn, bfn, grid));
    best_fine = std::max(best_fine, ratio(w3fn, bfn, fine));
  }
  ConstantEstimate est;
  est.best_ratio = best;
  est.sample_size = n_samples;
  est.refinement_drift = std::abs(best_fine - best) / std::max(best, 1e-300);
  return est;
}

TestFnTable testfn_limits(const FluidParams& params, const MagneticField& field,
                          const std::vector<double>& k_seq, const std::vector<double>& n_seq,
                          const TwoLayerGrid& grid) {
  if (k_seq.size() != n_seq.size() || k_seq.empty()) {
    throw std::invalid_argument("testfn_limits: k_seq and n_seq must be equal-length, nonempty");
  }
  for (std::size_t i = 1; i < k_seq.size(); ++i) {
    if (!(k_seq[i] > k_seq[i - 1]) || !(n_seq[i] > n_seq[i - 1])) {
      throw std::invalid_argument("testfn_limits: sequences must be increasing");
    }
  }
  // Rotate so the horizontal field is (B1, 0); the construction lives in that
  // frame.
  const Canonicalized canon = canonicalize(field, Eigen::Vector2d(1.0, 0.0));
  const double b1 = canon.field.b[0];
  const double b3 = canon.field.b[2];
  const double rhog = params.density_jump() * params.g;

  // Gaussian factors: with phi(z) = e^{-z^2} and phi_n(z) = n^{-1/4} e^{-n z^2},
  //   Int phi^2 = Ie, Int phi'^2 = 4 Iz2e, Int phi_n^2 = Ie / n,
  //   Int phi_n'^2 = 4 Iz2e, where Ie = Int e^{-2u^2}, Iz2e = Int u^2 e^{-2u^2}.
  const LayerGrid line = build_layer<double>(400, -8.0, 8.0);
  double Ie = 0.0, Iz2e = 0.0;
  for (int j = 0; j < line.count(); ++j) {
    const double u = line.nodes[j];
    const double e = std::exp(-2.0 * u * u);
    Ie += line.weights[j] * e;
    Iz2e += line.weights[j] * u * u * e;
  }
  const double Ie_exact = std::sqrt(std::acos(-1.0) / 2.0);
  const double Iz2e_exact = Ie_exact / 4.0;
  TestFnTable table;
  table.truncation_error = std::max(std::abs(Ie - Ie_exact) / Ie_exact,
                                    std::abs(Iz2e - Iz2e_exact) / Iz2e_exact);
  if (table.truncation_error > 1e-10) {
    throw std::runtime_error("testfn_limits: Gaussian quadrature truncation error above 1e-10");
  }
  const double i_phi = Ie;
  const double i_dphi = 4.0 * Iz2e;

  // vertical factors on the grid
  const Eigen::VectorXcd psi_u = psi_profile(grid.upper);
  const Eigen::VectorXcd psi_l = psi_profile(grid.lower);
  const Eigen::VectorXcd dpsi_u = differentiate(grid.upper, psi_u);
  const Eigen::VectorXcd dpsi_l = differentiate(grid.lower, psi_l);
  auto sq_integral = [&](const Eigen::VectorXcd& up, const Eigen::VectorXcd& lo) {
    double acc = 0.0;
    for (int j = 0; j < grid.upper.count(); ++j) acc += grid.upper.weights[j] * std::norm(up[j]);
    for (int j = 0; j < grid.lower.count(); ++j) acc += grid.lower.weights[j] * std::norm(lo[j]);
    return acc;
  };
  const double s_psi = sq_integral(psi_u, psi_l);
  const double s_dpsi = sq_integral(dpsi_u, dpsi_l);
  const double psi0 = std::abs(0.5 * (psi_u[grid.upper_interface_index()] +
                                      psi_l[grid.lower_interface_index()]));

  table.limit = b3 * b3 * s_dpsi / (psi0 * psi0);
  for (std::size_t i = 0; i < k_seq.size(); ++i) {
    const double kk = k_seq[i];
    const double nn = n_seq[i];
    const double i_phin = i_phi / nn;     // Int phi_n^2
    const double i_dphin = i_dphi;        // Int phi_n'^2, n-independent
    const double numerator = b1 * b1 * i_dphi * i_phin * s_dpsi +
                             (b1 * b1 / (kk * kk)) * i_dphi * i_dphin * s_psi +
                             b3 * b3 * i_phi * i_dphin * s_dpsi;
    const double trace = i_phi * i_dphin * psi0 * psi0;
    TestFnRow row;
    row.k = kk;
    row.n = nn;
    row.ratio = numerator / trace;
    row.e0 = 0.5 * (numerator - rhog * trace);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace mhdrt

#include "mhdrt/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "assembly.hpp"
#include "quadforms_cache.hpp"

namespace mhdrt {

using cxd = std::complex<double>;

namespace {

void phase_normalize(Eigen::VectorXcd& x) {
  int best = 0;
  double mag = -1.0;
  for (int i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a > mag + 1e-15 * mag) {  // strictly larger wins; ties keep lowest index
      mag = a;
      best = i;
    }
  }
  if (mag > 0.0) {
    x *= std::conj(x[best]) / mag;
  }
}

}  // namespace

AlphaResult alpha(const QuadForms& forms, double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw std::invalid_argument("alpha: s must be finite and nonnegative");
  }
  const QuadFormsCache& cache = *forms.cache;
  const Eigen::MatrixXcd C = cache.E0w + s * cache.E1w;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(C);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("alpha: Hermitian eigensolve did not converge");
  }
  const int d = static_cast<int>(C.rows());
  AlphaResult out;
  const double alpha_saes = es.eigenvalues()[0];
  const Eigen::VectorXcd y = es.eigenvectors().col(0);
  const double scale =
      std::max({std::abs(es.eigenvalues()[0]), std::abs(es.eigenvalues()[d - 1]), 1e-300});
  out.eig_residual = (C * y - alpha_saes * y).norm() / (y.norm() * scale);

  Eigen::VectorXcd x = cache.W * y;
  const double jnorm = std::sqrt(std::real(x.dot(forms.J * x)));
  x /= jnorm;
  phase_normalize(x);
  out.coords = x;
  out.minimizer = forms.basis.from_coords(x);
  // Rayleigh quotient through the raw forms: the whitened eigensolve only
  // locates alpha to eps * ||C||, while the minimizer is smooth and its raw
  // quadratic values carry no stiff-mode scale.
  out.alpha = (std::real(x.dot(forms.E0 * x)) + s * std::real(x.dot(forms.E1 * x))) /
              std::real(x.dot(forms.J * x));
  return out;
}

double alpha_refined(const QuadForms& forms, double s) {
  using Real = long double;
  using CL = std::complex<Real>;
  using MatL = detail::MatC<Real>;
  using VecL = detail::VecC<Real>;

  const AlphaResult seed = alpha(forms, s);
  const auto& ker = detail::ld_kernel(forms);
  const auto fs = detail::assemble_form_set<Real>(ker, forms.params, forms.field);

  VecL c(ker.ops.dof());
  c.head(ker.ops.dw) = ker.ops.Zw.template cast<CL>().transpose() * seed.minimizer.w3.cast<CL>();
  c.tail(ker.ops.db) = ker.ops.Zb.template cast<CL>().transpose() * seed.minimizer.b.cast<CL>();
  auto jnorm = [&](const VecL& v) {
    return std::sqrt(std::abs((v.adjoint() * (fs.J * v))(0, 0)));
  };
  const Real n0 = jnorm(c);
  if (!(n0 > Real(0))) return seed.alpha;
  c /= n0;

  const MatL A = Real(s) * fs.E1 + fs.E0;
  Real mu = static_cast<Real>(seed.alpha);
  for (int it = 0; it < 3; ++it) {
    // shifted inverse iteration on the generalized pencil (A, J)
    const MatL shifted = A - (mu - Real(1e-18L) * (std::abs(mu) + Real(1))) * fs.J;
    Eigen::PartialPivLU<MatL> lu(shifted);
    VecL next = lu.solve(fs.J * c);
    const Real nn = jnorm(next);
    if (!(nn > Real(0)) || !next.allFinite()) break;
    c = next / nn;
    mu = std::real((c.adjoint() * (A * c))(0, 0)) /
         std::real((c.adjoint() * (fs.J * c))(0, 0));
  }
  return static_cast<double>(mu);
}

double inviscid_quotient(const MagneticField& field, const Eigen::Vector2d& k,
                         const TwoLayerGrid& grid) {
  const auto ker = detail::make_kernel<double>(grid, k);
  const double beta = field.horizontal().dot(k);
  const double b3 = field.vertical();
  if (beta == 0.0 && b3 == 0.0) {
    return 0.0;  // (B.grad) annihilates every mode of this family
  }
  const Eigen::MatrixXcd M = detail::magnetic_form<double>(ker, beta, b3);
  const Eigen::RowVectorXcd S = ker.ops.S3;
  if (S.norm() < 1e-14) {
    throw std::runtime_error("inviscid_quotient: interface trace is degenerate");
  }
  Eigen::LDLT<Eigen::MatrixXcd> ldlt(M);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("inviscid_quotient: magnetic form factorization failed");
  }
  const Eigen::VectorXcd z = ldlt.solve(S.adjoint());
  const double gram = std::real((S * z)(0));
  if (!(gram > 0.0) || !std::isfinite(gram)) {
    throw std::runtime_error("inviscid_quotient: magnetic form is not positive on traces");
  }
  return 1.0 / gram;
}

namespace {

using Real = long double;
using CL = std::complex<Real>;
using MatL = detail::MatC<Real>;
using VecL = detail::VecC<Real>;

struct LayerSeries {
  // Chebyshev coefficients per component and derivative order, one layer
  VecL c[3][3];  // c[comp][order]
};

VecL truncate_tail(VecL a, Real rel) {
  Real mx = 0;
  for (int i = 0; i < a.size(); ++i) mx = std::max(mx, std::abs(a[i]));
  const Real tol = rel * mx;
  for (int i = 0; i < a.size(); ++i) {
    if (std::abs(a[i]) < tol) a[i] = CL(0);
  }
  return a;
}

}  // namespace

SteadyResidual steady_residual(const FluidParams& params, const MagneticField& field,
                               const TwoLayerGrid& grid, double lambda,
                               const ReducedMode& mode) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("steady_residual: lambda must be finite and positive");
  }
  const int nu = grid.upper.count();
  const int nl = grid.lower.count();
  if (mode.w3.size() != nu + nl || mode.b.size() != nu + nl) {
    throw std::invalid_argument("steady_residual: mode length does not match grid");
  }

  SteadyResidual out;
  const double mode_scale =
      std::max(mode.w3.cwiseAbs().maxCoeff(), mode.b.cwiseAbs().maxCoeff());
  if (mode_scale == 0.0) {
    out.pressure = Eigen::VectorXcd::Zero(nu + nl);
    return out;  // zero mode solves trivially
  }

  // Rebuild the discrete problem in extended precision; high-order spectral
  // derivatives of double-precision data would drown the residual in roundoff.
  const auto gridL =
      build_grid<Real>(grid.upper.n, grid.lower.n, static_cast<Real>(grid.ell()),
                       static_cast<Real>(grid.m()));
  const Eigen::Vector2<Real> kL = mode.k.cast<Real>();
  const auto ker = detail::make_kernel<Real>(gridL, kL);
  const auto fs = detail::assemble_form_set<Real>(ker, params, field);
  const int d = ker.ops.dof();

  // Project the node values onto the extended-precision basis.
  VecL c(d);
  {
    VecL w3 = mode.w3.cast<CL>();
    VecL b = mode.b.cast<CL>();
    c.head(ker.ops.dw) = ker.ops.Zw.template cast<CL>().transpose() * w3;
    c.tail(ker.ops.db) = ker.ops.Zb.template cast<CL>().transpose() * b;
  }
  const Real jn = std::sqrt(std::abs((c.adjoint() * (fs.J * c))(0, 0)));
  if (!(jn > Real(0))) {
    throw std::invalid_argument("steady_residual: mode is not in the admissible basis");
  }
  c /= jn;

  // Fixed-lambda inverse iteration on the quadratic pencil
  //   P(lambda) = lambda^2 2J + lambda 2E1 + 2E0
  // sharpens the eigenvector without moving lambda, so an inconsistent
  // (lambda, mode) pair keeps its O(1) residual.
  const Real lam = static_cast<Real>(lambda);
  const MatL P = Real(2) * (lam * lam * fs.J + lam * fs.E1 + fs.E0);
  {
    Eigen::PartialPivLU<MatL> lu(P);
    for (int it = 0; it < 4; ++it) {
      VecL next = lu.solve(fs.J * c);
      const Real nrm = std::sqrt(std::abs((next.adjoint() * (fs.J * next))(0, 0)));
      if (!(nrm > Real(0)) || !std::isfinite((double)nrm)) break;
      next /= nrm;
      c = next;
    }
  }

  // Nodal profiles and their per-layer Chebyshev series.
  const Real kappa = ker.ops.kappa;
  const Eigen::Vector2<Real> khat = ker.ops.khat;
  const Eigen::Vector2<Real> kperp = ker.ops.kperp;
  const Real beta = Real(field.b[0]) * kL[0] + Real(field.b[1]) * kL[1];
  const Real b3 = static_cast<Real>(field.vertical());
  const CL iu(Real(0), Real(1));

  LayerSeries up, lo;
  VecL nodal[3];
  for (int comp = 0; comp < 3; ++comp) {
    nodal[comp] = ker.ops.C[comp] * c;
    VecL vu = nodal[comp].head(nu);
    VecL vl = nodal[comp].tail(nl);
    up.c[comp][0] = truncate_tail(cheb_coefficients<Real>(gridL.upper, vu), Real(3e-15L));
    lo.c[comp][0] = truncate_tail(cheb_coefficients<Real>(gridL.lower, vl), Real(3e-15L));
    for (int o = 1; o < 3; ++o) {
      up.c[comp][o] = cheb_derivative<Real>(gridL.upper, up.c[comp][o - 1]);
      lo.c[comp][o] = cheb_derivative<Real>(gridL.lower, lo.c[comp][o - 1]);
    }
  }

  const Real rho[2] = {static_cast<Real>(params.rho_plus), static_cast<Real>(params.rho_minus)};
  const Real mu[2] = {static_cast<Real>(params.mu_plus), static_cast<Real>(params.mu_minus)};
  const Real rhog = static_cast<Real>(params.density_jump() * params.g);

  // Horizontal momentum rows give q algebraically:
  //   M_i := lam^2 rho u_i - lam mu (u_i'' - |k|^2 u_i) - (i beta + B3 d3)^2 u_i,
  //   q = i k . M_* / |k|^2.
  // Vertical and transverse rows are then residuals.
  Real momentum_sup = 0, momentum_scale = 0;
  Eigen::VectorXcd pressure(nu + nl);

  struct IfaceData {
    CL u[3], du[3], q;
  } iface[2];

  for (int side = 0; side < 2; ++side) {
    const LayerSeries& S = side == 0 ? up : lo;
    const LayerGridT<Real>& lg = side == 0 ? gridL.upper : gridL.lower;
    const int npts = lg.count();
    const Real rh = rho[side], muv = mu[side];

    // q and its derivative as series: build M_i series in coefficient space.
    // (i beta + B3 d3)^2 f = -beta^2 f + 2 i beta B3 f' + B3^2 f''
    auto mom_series = [&](int comp) -> VecL {
      const int len = static_cast<int>(S.c[comp][0].size());
      VecL m = VecL::Zero(len);
      auto add = [&](const VecL& src, CL w) {
        for (int i = 0; i < src.size() && i < m.size(); ++i) m[i] += w * src[i];
      };
      add(S.c[comp][0], CL(lam * lam * rh + lam * muv * kappa * kappa + beta * beta));
      add(S.c[comp][2], CL(-lam * muv - b3 * b3));
      add(S.c[comp][1], -Real(2) * iu * beta * b3);
      return m;
    };
    const VecL m1 = mom_series(0);
    const VecL m2 = mom_series(1);
    VecL qc = VecL::Zero(std::max(m1.size(), m2.size()));
    for (int i = 0; i < qc.size(); ++i) {
      CL acc(0);
      if (i < m1.size()) acc += CL(kL[0]) * m1[i];
      if (i < m2.size()) acc += CL(kL[1]) * m2[i];
      qc[i] = iu * acc / (kappa * kappa);
    }
    const VecL dqc = cheb_derivative<Real>(lg, qc);

    for (int j = 0; j < npts; ++j) {
      const Real x = lg.nodes[j];
      auto ev = [&](const VecL& a) { return cheb_eval<Real>(lg, a, x); };
      const CL u3 = ev(S.c[2][0]);
      const CL d2u3 = ev(S.c[2][2]);
      const CL du3 = ev(S.c[2][1]);
      const CL l2u3 = -beta * beta * u3 + Real(2) * iu * beta * b3 * du3 + b3 * b3 * d2u3;
      const CL t_inertia = lam * lam * rh * u3;
      const CL t_visc = -lam * muv * (d2u3 - kappa * kappa * u3);
      const CL t_press = ev(dqc);
      const CL vert = t_inertia + t_visc + t_press - l2u3;

      const CL em1 = ev(m1);
      const CL em2 = ev(m2);
      const CL trans = CL(kperp[0]) * em1 + CL(kperp[1]) * em2;

      momentum_sup = std::max({momentum_sup, std::abs(vert), std::abs(trans)});
      momentum_scale = std::max({momentum_scale, std::abs(t_inertia), std::abs(t_visc),
                                 std::abs(t_press), std::abs(l2u3), std::abs(em1),
                                 std::abs(em2)});
      const int gidx = side == 0 ? j : nu + j;
      pressure[gidx] = cxd(static_cast<double>(ev(qc).real()), static_cast<double>(ev(qc).imag()));
    }

    // one-sided interface data (x3 = 0)
    const Real x0 = side == 0 ? lg.lo : lg.hi;
    IfaceData& f = iface[side];
    for (int compi = 0; compi < 3; ++compi) {
      f.u[compi] = cheb_eval<Real>(lg, S.c[compi][0], x0);
      f.du[compi] = cheb_eval<Real>(lg, S.c[compi][1], x0);
    }
    f.q = cheb_eval<Real>(lg, qc, x0);
  }

  out.momentum = momentum_scale > 0 ? static_cast<double>(momentum_sup / momentum_scale) : 0.0;

  // Stress-jump condition on the interface:
  //   [[ q I - lam mu D(u) ]] e3 - [[ B3 (B.grad) u ]] - [rho] g u3 e3 = 0,
  // with D(u) e3 = (u1' + i k1 u3, u2' + i k2 u3, 2 u3').
  const CL ik1 = iu * CL(kL[0]);
  const CL ik2 = iu * CL(kL[1]);
  CL jumpvec[3];
  Real jump_scale = 0;
  for (int compi = 0; compi < 3; ++compi) jumpvec[compi] = CL(0);
  for (int side = 0; side < 2; ++side) {
    const Real sgn = side == 0 ? Real(1) : Real(-1);
    const Real muv = mu[side];
    const IfaceData& f = iface[side];
    const CL de3[3] = {f.du[0] + ik1 * f.u[2], f.du[1] + ik2 * f.u[2], Real(2) * f.du[2]};
    for (int compi = 0; compi < 3; ++compi) {
      const CL stress = (compi == 2 ? f.q : CL(0)) - lam * muv * de3[compi];
      const CL mag = b3 * (iu * beta * f.u[compi] + b3 * f.du[compi]);
      jumpvec[compi] += sgn * (stress - mag);
      jump_scale = std::max({jump_scale, std::abs(stress), std::abs(mag)});
    }
  }
  const CL u3_iface = (iface[0].u[2] + iface[1].u[2]) / Real(2);
  jumpvec[2] -= rhog * u3_iface;
  jump_scale = std::max(jump_scale, std::abs(rhog * u3_iface));

  Real jump_sup = 0;
  for (int compi = 0; compi < 3; ++compi) jump_sup = std::max(jump_sup, std::abs(jumpvec[compi]));
  out.jump = jump_scale > 0 ? static_cast<double>(jump_sup / jump_scale) : 0.0;
  out.pressure = pressure;
  return out;
}

}  // namespace mhdrt

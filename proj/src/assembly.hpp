#pragma once

// Internal assembly engine shared by forms, spectrum and growthrate. Builds the
// per-wavevector divergence-free reduction and the field-independent pieces of
// the quadratic forms, templated on the scalar type so the steady-residual
// evaluation can run the same pipeline in extended precision.

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <stdexcept>

#include "mhdrt/chebgrid.hpp"
#include "mhdrt/model.hpp"

namespace mhdrt::detail {

template <class Real>
using MatR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using MatC = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using VecR = Eigen::Vector<Real, Eigen::Dynamic>;
template <class Real>
using VecC = Eigen::Vector<std::complex<Real>, Eigen::Dynamic>;
template <class Real>
using RowC = Eigen::RowVector<std::complex<Real>, Eigen::Dynamic>;

/// Null-space basis of a (rows x Ntot) constraint matrix, orthonormal columns.
template <class Real>
MatR<Real> constraint_null_space(MatR<Real> cons) {
  for (int r = 0; r < cons.rows(); ++r) {
    const Real nrm = cons.row(r).norm();
    if (nrm > Real(0)) cons.row(r) /= nrm;
  }
  Eigen::ColPivHouseholderQR<MatR<Real>> qr(cons.transpose());
  const int rank = static_cast<int>(qr.rank());
  if (rank != cons.rows()) {
    throw std::runtime_error("constraint_null_space: dependent constraints");
  }
  MatR<Real> q = qr.householderQ();
  return q.rightCols(q.cols() - rank);
}

/// Per-(grid, k) operators: the reduction w = (w3, b) -> (u1, u2, u3) with
/// u_* = a khat + b kperp, a = i w3' / |k|, and everything needed to quadrate.
/// Quadratic forms are integrated on a refined Clenshaw-Curtis rule (degree
/// 2n+2 per layer) where products of degree-n basis polynomials are exact;
/// the node rule aliases the top modes and pollutes eigenfunctions.
template <class Real>
struct Ops {
  TwoLayerGridT<Real> grid;
  Eigen::Vector2<Real> k;
  Real kappa = Real(0);
  Eigen::Vector2<Real> khat, kperp;

  int Nu = 0, Nl = 0, Ntot = 0;
  int dw = 0, db = 0;

  MatR<Real> Zw, Zb;      // null-space bases: Ntot x dw, Ntot x db
  MatR<Real> Dblock;      // block-diagonal spectral derivative, Ntot x Ntot

  MatC<Real> C[3];        // component maps at the nodes, Ntot x (dw+db)
  MatC<Real> DC[3];       // d/dx3 of the components at the nodes
  RowC<Real> S3;          // interface value of u3 (average of the two sides)

  // quadrature-rule data (refined grid)
  int Nq = 0;                     // fine nodes, both layers
  VecR<Real> wq_upper, wq_lower;  // fine weights masked per layer (Nq)
  MatC<Real> Cq[3], DCq[3];       // component maps evaluated at fine nodes

  int dof() const { return dw + db; }
};

template <class Real>
Ops<Real> make_ops(const TwoLayerGridT<Real>& grid, const Eigen::Vector2<Real>& k) {
  using C = std::complex<Real>;
  if (k.norm() == Real(0)) {
    throw std::invalid_argument("reduce_basis: k = 0 has no normal-mode reduction");
  }
  Ops<Real> ops;
  ops.grid = grid;
  ops.k = k;
  ops.kappa = k.norm();
  ops.khat = k / ops.kappa;
  ops.kperp = Eigen::Vector2<Real>(-ops.khat[1], ops.khat[0]);
  ops.Nu = grid.upper.count();
  ops.Nl = grid.lower.count();
  ops.Ntot = ops.Nu + ops.Nl;

  const int iface_u = 0;                    // global index of upper interface node
  const int iface_l = ops.Nu + grid.lower.n;  // global index of lower interface node
  const int wall_u = ops.Nu - 1;
  const int wall_l = ops.Nu;

  ops.Dblock = MatR<Real>::Zero(ops.Ntot, ops.Ntot);
  ops.Dblock.topLeftCorner(ops.Nu, ops.Nu) = grid.upper.diff;
  ops.Dblock.bottomRightCorner(ops.Nl, ops.Nl) = grid.lower.diff;

  // Essential conditions. The full lifted velocity must vanish on the rigid
  // boundaries and be continuous across the interface; through a = i w3'/|k|
  // this clamps w3 (value and derivative) while b only carries values.
  MatR<Real> cw = MatR<Real>::Zero(6, ops.Ntot);
  cw(0, wall_u) = Real(1);
  cw(1, wall_l) = Real(1);
  cw.row(2).head(ops.Nu) = grid.upper.diff.row(ops.Nu - 1);
  cw.row(3).tail(ops.Nl) = grid.lower.diff.row(0);
  cw(4, iface_u) = Real(1);
  cw(4, iface_l) = Real(-1);
  cw.row(5).head(ops.Nu) = grid.upper.diff.row(0);
  cw.row(5).tail(ops.Nl) -= grid.lower.diff.row(ops.Nl - 1);

  MatR<Real> cb = MatR<Real>::Zero(3, ops.Ntot);
  cb(0, wall_u) = Real(1);
  cb(1, wall_l) = Real(1);
  cb(2, iface_u) = Real(1);
  cb(2, iface_l) = Real(-1);

  ops.Zw = constraint_null_space<Real>(cw);
  ops.Zb = constraint_null_space<Real>(cb);
  ops.dw = static_cast<int>(ops.Zw.cols());
  ops.db = static_cast<int>(ops.Zb.cols());
  const int d = ops.dof();

  MatC<Real> w3map = MatC<Real>::Zero(ops.Ntot, d);
  w3map.leftCols(ops.dw) = ops.Zw.template cast<C>();
  MatC<Real> bmap = MatC<Real>::Zero(ops.Ntot, d);
  bmap.rightCols(ops.db) = ops.Zb.template cast<C>();

  const C iunit(Real(0), Real(1));
  MatC<Real> amap = (iunit / ops.kappa) * (ops.Dblock.template cast<C>() * w3map);

  ops.C[0] = C(ops.khat[0]) * amap + C(ops.kperp[0]) * bmap;
  ops.C[1] = C(ops.khat[1]) * amap + C(ops.kperp[1]) * bmap;
  ops.C[2] = w3map;
  for (int c = 0; c < 3; ++c) {
    ops.DC[c] = ops.Dblock.template cast<C>() * ops.C[c];
  }

  ops.S3 = Real(0.5) * (ops.C[2].row(iface_u) + ops.C[2].row(iface_l));

  // refined quadrature rule and exact upsampling of the basis
  const auto fine_u = build_layer<Real>(2 * grid.upper.n + 2, grid.upper.lo, grid.upper.hi);
  const auto fine_l = build_layer<Real>(2 * grid.lower.n + 2, grid.lower.lo, grid.lower.hi);
  const MatR<Real> pu = interpolation_matrix<Real>(grid.upper, fine_u.nodes);
  const MatR<Real> pl = interpolation_matrix<Real>(grid.lower, fine_l.nodes);
  const int nfu = fine_u.count();
  const int nfl = fine_l.count();
  ops.Nq = nfu + nfl;
  MatR<Real> up = MatR<Real>::Zero(ops.Nq, ops.Ntot);
  up.topLeftCorner(nfu, ops.Nu) = pu;
  up.bottomRightCorner(nfl, ops.Nl) = pl;
  ops.wq_upper = VecR<Real>::Zero(ops.Nq);
  ops.wq_lower = VecR<Real>::Zero(ops.Nq);
  ops.wq_upper.head(nfu) = fine_u.weights;
  ops.wq_lower.tail(nfl) = fine_l.weights;
  const MatC<Real> upc = up.template cast<C>();
  for (int c = 0; c < 3; ++c) {
    ops.Cq[c] = upc * ops.C[c];
    ops.DCq[c] = upc * ops.DC[c];
  }
  return ops;
}

/// Field-independent templates of the quadratic forms, split per layer so the
/// physical coefficients can be applied afterwards.
template <class Real>
struct Kernel {
  Ops<Real> ops;
  MatC<Real> P0u, P0l;    // sum_c C^H W_layer C
  MatC<Real> P2u, P2l;    // sum_c (DC)^H W_layer (DC)
  MatC<Real> P01u, P01l;  // sum_c C^H W_layer (DC)
  MatC<Real> Qu, Ql;      // sum_{ij} Dij^H W_layer Dij, unit viscosity
};

template <class Real>
Kernel<Real> make_kernel(const TwoLayerGridT<Real>& grid, const Eigen::Vector2<Real>& k) {
  using Cx = std::complex<Real>;
  Kernel<Real> ker;
  ker.ops = make_ops<Real>(grid, k);
  const Ops<Real>& ops = ker.ops;
  const int d = ops.dof();

  auto weighted = [&](const MatC<Real>& x, const VecR<Real>& w, const MatC<Real>& y) {
    return MatC<Real>(x.adjoint() * w.template cast<Cx>().asDiagonal() * y);
  };

  ker.P0u = MatC<Real>::Zero(d, d);
  ker.P0l = MatC<Real>::Zero(d, d);
  ker.P2u = MatC<Real>::Zero(d, d);
  ker.P2l = MatC<Real>::Zero(d, d);
  ker.P01u = MatC<Real>::Zero(d, d);
  ker.P01l = MatC<Real>::Zero(d, d);
  for (int c = 0; c < 3; ++c) {
    ker.P0u += weighted(ops.Cq[c], ops.wq_upper, ops.Cq[c]);
    ker.P0l += weighted(ops.Cq[c], ops.wq_lower, ops.Cq[c]);
    ker.P2u += weighted(ops.DCq[c], ops.wq_upper, ops.DCq[c]);
    ker.P2l += weighted(ops.DCq[c], ops.wq_lower, ops.DCq[c]);
    ker.P01u += weighted(ops.Cq[c], ops.wq_upper, ops.DCq[c]);
    ker.P01l += weighted(ops.Cq[c], ops.wq_lower, ops.DCq[c]);
  }

  // |D w|^2 with D(u)_ij = d_j u_i + d_i u_j; horizontal derivatives act as
  // multiplication by i k.
  const Cx iunit(Real(0), Real(1));
  const Cx ik1 = iunit * Cx(ops.k[0]);
  const Cx ik2 = iunit * Cx(ops.k[1]);
  auto partial = [&](int dir, int comp) -> MatC<Real> {
    if (dir == 0) return ik1 * ops.Cq[comp];
    if (dir == 1) return ik2 * ops.Cq[comp];
    return ops.DCq[comp];
  };
  ker.Qu = MatC<Real>::Zero(d, d);
  ker.Ql = MatC<Real>::Zero(d, d);
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const MatC<Real> dij = partial(j, i) + partial(i, j);
      const Real fac = (i == j) ? Real(1) : Real(2);
      ker.Qu += fac * weighted(dij, ops.wq_upper, dij);
      ker.Ql += fac * weighted(dij, ops.wq_lower, dij);
    }
  }
  return ker;
}

template <class Real>
void hermitize(MatC<Real>& a) {
  a = Real(0.5) * (a + a.adjoint()).eval();
}

/// The paper's three functionals as Hermitian matrices over reduced
/// coordinates: x^H E0 x, x^H E1 x, x^H J x equal E0(w), E1(w), J(w) of the
/// lifted field (per unit horizontal area).
template <class Real>
struct FormSet {
  MatC<Real> E0, E1, J;
  MatC<Real> Mag, Sur;  // E0 = Mag - Sur
};

template <class Real>
MatC<Real> magnetic_form(const Kernel<Real>& ker, Real beta, Real b3) {
  using Cx = std::complex<Real>;
  const Cx iunit(Real(0), Real(1));
  const MatC<Real> p0 = ker.P0u + ker.P0l;
  const MatC<Real> p2 = ker.P2u + ker.P2l;
  const MatC<Real> p01 = ker.P01u + ker.P01l;
  MatC<Real> mag = Cx(beta * beta) * p0 + Cx(b3 * b3) * p2 +
                   Cx(beta * b3) * (iunit * (p01.adjoint() - p01));
  hermitize<Real>(mag);
  return mag;  // = the matrix of the full integral |(B.grad) w|^2 (no 1/2)
}

template <class Real>
FormSet<Real> assemble_form_set(const Kernel<Real>& ker, const FluidParams& params,
                                const MagneticField& field) {
  FormSet<Real> fs;
  const Real beta_r = Real(field.b[0]) * ker.ops.k[0] + Real(field.b[1]) * ker.ops.k[1];
  const Real b3 = Real(field.vertical());
  const Real rhog = Real(params.density_jump() * params.g);

  fs.Mag = Real(0.5) * magnetic_form<Real>(ker, beta_r, b3);
  fs.Sur = Real(0.5) * rhog * (ker.ops.S3.adjoint() * ker.ops.S3);
  hermitize<Real>(fs.Sur);
  fs.E0 = fs.Mag - fs.Sur;
  fs.E1 = Real(0.25) * (Real(params.mu_plus) * ker.Qu + Real(params.mu_minus) * ker.Ql);
  hermitize<Real>(fs.E1);
  fs.J = Real(0.5) * (Real(params.rho_plus) * ker.P0u + Real(params.rho_minus) * ker.P0l);
  hermitize<Real>(fs.J);
  return fs;
}

}  // namespace mhdrt::detail

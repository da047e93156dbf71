#include "mhdrt/forms.hpp"

#include <cmath>
#include <stdexcept>

#include "assembly.hpp"
#include "quadforms_cache.hpp"

namespace mhdrt {

using detail::MatC;
using cxd = std::complex<double>;

Eigen::VectorXcd ReducedBasis::to_coords(const ReducedMode& mode) const {
  if (mode.w3.size() != Zw.rows() || mode.b.size() != Zb.rows()) {
    throw std::invalid_argument("to_coords: mode length does not match basis");
  }
  Eigen::VectorXcd c(dof());
  c.head(Zw.cols()) = Zw.transpose().cast<cxd>() * mode.w3;
  c.tail(Zb.cols()) = Zb.transpose().cast<cxd>() * mode.b;
  return c;
}

ReducedMode ReducedBasis::from_coords(const Eigen::VectorXcd& coords) const {
  if (coords.size() != dof()) {
    throw std::invalid_argument("from_coords: coordinate length does not match basis");
  }
  ReducedMode mode;
  mode.k = k;
  mode.w3 = Zw.cast<cxd>() * coords.head(Zw.cols());
  mode.b = Zb.cast<cxd>() * coords.tail(Zb.cols());
  return mode;
}

ReducedBasis reduce_basis(const TwoLayerGrid& grid, const Eigen::Vector2d& k) {
  const auto ops = detail::make_ops<double>(grid, k);
  ReducedBasis basis;
  basis.grid = grid;
  basis.k = k;
  basis.kappa = ops.kappa;
  basis.khat = ops.khat;
  basis.kperp = ops.kperp;
  basis.Zw = ops.Zw;
  basis.Zb = ops.Zb;
  return basis;
}

namespace {

struct LayerScalars {
  double mu_at(int global, int nu) const { return global < nu ? mu_plus : mu_minus; }
  double rho_at(int global, int nu) const { return global < nu ? rho_plus : rho_minus; }
  double mu_plus, mu_minus, rho_plus, rho_minus;
};

VelocityProfile lift_unchecked(const TwoLayerGrid& grid, const ReducedMode& mode) {
  const double kappa = mode.k.norm();
  if (kappa == 0.0) {
    throw std::invalid_argument("lift_velocity: k = 0 mode cannot be lifted");
  }
  const Eigen::Vector2d khat = mode.k / kappa;
  const Eigen::Vector2d kperp(-khat[1], khat[0]);
  const int nu = grid.upper.count();
  const int nl = grid.lower.count();
  if (mode.w3.size() != nu + nl || mode.b.size() != nu + nl) {
    throw std::invalid_argument("lift_velocity: mode length does not match grid");
  }
  Eigen::VectorXcd dw3(nu + nl);
  dw3.head(nu) = grid.upper.diff.cast<cxd>() * mode.w3.head(nu);
  dw3.tail(nl) = grid.lower.diff.cast<cxd>() * mode.w3.tail(nl);
  const Eigen::VectorXcd a = (cxd(0.0, 1.0) / kappa) * dw3;

  VelocityProfile p;
  p.u1 = khat[0] * a + kperp[0] * mode.b;
  p.u2 = khat[1] * a + kperp[1] * mode.b;
  p.u3 = mode.w3;
  return p;
}

void validate_mode(const TwoLayerGrid& grid, const ReducedMode& mode) {
  const int nu = grid.upper.count();
  const int nl = grid.lower.count();
  const double scale =
      std::max({mode.w3.cwiseAbs().maxCoeff(), mode.b.cwiseAbs().maxCoeff(), 1e-300});
  const double tol = 1e-9 * scale;
  const int wall_u = nu - 1;
  const int wall_l = nu;
  const int iface_u = 0;
  const int iface_l = nu + nl - 1;
  auto check = [&](cxd v, const char* what) {
    if (std::abs(v) > tol) {
      throw std::invalid_argument(std::string("lift_velocity: mode violates ") + what);
    }
  };
  check(mode.w3[wall_u], "w3 = 0 at x3 = ell");
  check(mode.w3[wall_l], "w3 = 0 at x3 = -m");
  check(mode.b[wall_u], "b = 0 at x3 = ell");
  check(mode.b[wall_l], "b = 0 at x3 = -m");
  check(mode.w3[iface_u] - mode.w3[iface_l], "continuity of w3 across the interface");
  check(mode.b[iface_u] - mode.b[iface_l], "continuity of b across the interface");
}

}  // namespace

VelocityProfile lift_velocity(const TwoLayerGrid& grid, const ReducedMode& mode) {
  validate_mode(grid, mode);
  return lift_unchecked(grid, mode);
}

Eigen::VectorXcd mode_divergence(const TwoLayerGrid& grid, const Eigen::Vector2d& k,
                                 const VelocityProfile& profile) {
  const int nu = grid.upper.count();
  const int nl = grid.lower.count();
  Eigen::VectorXcd du3(nu + nl);
  du3.head(nu) = grid.upper.diff.cast<cxd>() * profile.u3.head(nu);
  du3.tail(nl) = grid.lower.diff.cast<cxd>() * profile.u3.tail(nl);
  return cxd(0.0, 1.0) * (k[0] * profile.u1 + k[1] * profile.u2) + du3;
}

struct FormsFactory::Impl {
  detail::Kernel<double> kernel;
  ReducedBasis basis;
  FluidParams params;
  // raw field-independent combinations
  Eigen::MatrixXcd p0, p2, p01;  // layers combined
  Eigen::MatrixXcd E1, J;
  // whitened counterparts
  Eigen::MatrixXcd W;
  Eigen::MatrixXcd P0w, P2w, X01w, E1w;
  Eigen::RowVectorXcd S3w;
  std::shared_ptr<detail::LdKernelHolder> ld_holder;
};

FormsFactory::FormsFactory(const FluidParams& params, const Eigen::Vector2d& k,
                           const TwoLayerGrid& grid) {
  auto impl = std::make_shared<Impl>();
  impl->params = params;
  impl->kernel = detail::make_kernel<double>(grid, k);
  const auto& ker = impl->kernel;

  impl->basis.grid = grid;
  impl->basis.k = k;
  impl->basis.kappa = ker.ops.kappa;
  impl->basis.khat = ker.ops.khat;
  impl->basis.kperp = ker.ops.kperp;
  impl->basis.Zw = ker.ops.Zw;
  impl->basis.Zb = ker.ops.Zb;

  impl->p0 = ker.P0u + ker.P0l;
  impl->p2 = ker.P2u + ker.P2l;
  impl->p01 = ker.P01u + ker.P01l;
  impl->E1 = 0.25 * (params.mu_plus * ker.Qu + params.mu_minus * ker.Ql);
  detail::hermitize<double>(impl->E1);
  impl->J = 0.5 * (params.rho_plus * ker.P0u + params.rho_minus * ker.P0l);
  detail::hermitize<double>(impl->J);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(impl->J);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("assemble_forms: eigensolve of J failed");
  }
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0)) {
    throw std::runtime_error("assemble_forms: J is not positive definite");
  }
  impl->W = es.eigenvectors() *
            es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();

  impl->P0w = impl->W.adjoint() * impl->p0 * impl->W;
  impl->P2w = impl->W.adjoint() * impl->p2 * impl->W;
  const Eigen::MatrixXcd p01w = impl->W.adjoint() * impl->p01 * impl->W;
  impl->X01w = cxd(0.0, 1.0) * (p01w.adjoint() - p01w);
  impl->E1w = impl->W.adjoint() * impl->E1 * impl->W;
  detail::hermitize<double>(impl->P0w);
  detail::hermitize<double>(impl->P2w);
  detail::hermitize<double>(impl->X01w);
  detail::hermitize<double>(impl->E1w);
  impl->S3w = ker.ops.S3 * impl->W;
  impl->ld_holder = std::make_shared<detail::LdKernelHolder>();
  impl_ = std::move(impl);
}

namespace detail {

const Kernel<long double>& ld_kernel(const QuadForms& forms) {
  LdKernelHolder& holder = *forms.cache->ld_holder;
  std::call_once(holder.flag, [&]() {
    const TwoLayerGrid& grid = forms.basis.grid;
    const auto grid_ld = build_grid<long double>(
        grid.upper.n, grid.lower.n, static_cast<long double>(grid.ell()),
        static_cast<long double>(grid.m()));
    holder.kernel = std::make_shared<const Kernel<long double>>(
        make_kernel<long double>(grid_ld, forms.basis.k.cast<long double>()));
  });
  return *holder.kernel;
}

}  // namespace detail

const ReducedBasis& FormsFactory::basis() const { return impl_->basis; }

QuadForms FormsFactory::make(const MagneticField& field) const {
  const Impl& im = *impl_;
  const double beta = field.horizontal().dot(im.basis.k);
  const double b3 = field.vertical();
  const double rhog = im.params.density_jump() * im.params.g;

  QuadForms forms;
  forms.params = im.params;
  forms.field = field;
  forms.basis = im.basis;
  forms.E1 = im.E1;
  forms.J = im.J;

  auto cache = std::make_shared<QuadFormsCache>();
  cache->Mag = 0.5 * (beta * beta * im.p0 + b3 * b3 * im.p2 +
                      cxd(0.0, 1.0) * (beta * b3) * (im.p01.adjoint() - im.p01));
  detail::hermitize<double>(cache->Mag);
  const Eigen::RowVectorXcd s3 = im.kernel.ops.S3;
  cache->Sur = 0.5 * rhog * (s3.adjoint() * s3);
  detail::hermitize<double>(cache->Sur);
  forms.E0 = cache->Mag - cache->Sur;

  cache->W = im.W;
  cache->E1w = im.E1w;
  cache->E0w = 0.5 * (beta * beta * im.P0w + b3 * b3 * im.P2w + beta * b3 * im.X01w) -
               0.5 * rhog * (im.S3w.adjoint() * im.S3w);
  detail::hermitize<double>(cache->E0w);
  cache->ld_holder = im.ld_holder;
  forms.cache = std::move(cache);
  return forms;
}

QuadForms assemble_forms(const FluidParams& params, const MagneticField& field,
                         const Eigen::Vector2d& k, const TwoLayerGrid& grid) {
  return FormsFactory(params, k, grid).make(field);
}

EnergyBreakdown evaluate_energy(const QuadForms& forms, const ReducedMode& mode, double s) {
  const TwoLayerGrid& grid = forms.basis.grid;
  const int nu = grid.upper.count();
  const int nl = grid.lower.count();
  if (mode.w3.size() != nu + nl || mode.b.size() != nu + nl) {
    throw std::invalid_argument("evaluate_energy: mode length does not match forms");
  }
  const VelocityProfile p = lift_unchecked(grid, mode);
  const Eigen::Vector2d k = forms.basis.k;

  auto d3 = [&](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out(nu + nl);
    out.head(nu) = grid.upper.diff.cast<cxd>() * v.head(nu);
    out.tail(nl) = grid.lower.diff.cast<cxd>() * v.tail(nl);
    return out;
  };

  // quadrate on the refined rule where products of grid polynomials are exact
  const LayerGrid fine_u = build_layer<double>(2 * grid.upper.n + 2, 0.0, grid.ell());
  const LayerGrid fine_l = build_layer<double>(2 * grid.lower.n + 2, -grid.m(), 0.0);
  const Eigen::MatrixXd pu = interpolation_matrix<double>(grid.upper, fine_u.nodes);
  const Eigen::MatrixXd pl = interpolation_matrix<double>(grid.lower, fine_l.nodes);
  const int nfu = fine_u.count();
  const int nfl = fine_l.count();
  auto upsample = [&](const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out(nfu + nfl);
    out.head(nfu) = pu.cast<cxd>() * v.head(nu);
    out.tail(nfl) = pl.cast<cxd>() * v.tail(nl);
    return out;
  };

  Eigen::VectorXcd comp[3], dcomp[3];
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXcd v = c == 0 ? p.u1 : (c == 1 ? p.u2 : p.u3);
    comp[c] = upsample(v);
    dcomp[c] = upsample(d3(v));
  }

  Eigen::VectorXd wq(nfu + nfl), mu(nfu + nfl), rho(nfu + nfl);
  for (int j = 0; j < nfu + nfl; ++j) {
    const bool up = j < nfu;
    wq[j] = up ? fine_u.weights[j] : fine_l.weights[j - nfu];
    mu[j] = up ? forms.params.mu_plus : forms.params.mu_minus;
    rho[j] = up ? forms.params.rho_plus : forms.params.rho_minus;
  }

  const double beta = forms.field.horizontal().dot(k);
  const double b3 = forms.field.vertical();
  const double rhog = forms.params.density_jump() * forms.params.g;

  double magnetic = 0.0, mass = 0.0, viscous = 0.0;
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXcd lc = cxd(0.0, beta) * comp[c] + b3 * dcomp[c];
    magnetic += (wq.array() * lc.array().abs2()).sum();
    mass += (wq.array() * rho.array() * comp[c].array().abs2()).sum();
  }
  auto partial = [&](int dir, int c) -> Eigen::VectorXcd {
    if (dir == 0) return cxd(0.0, k[0]) * comp[c];
    if (dir == 1) return cxd(0.0, k[1]) * comp[c];
    return dcomp[c];
  };
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) {
      const Eigen::VectorXcd dij = partial(j, i) + partial(i, j);
      const double fac = (i == j) ? 1.0 : 2.0;
      viscous += fac * (wq.array() * mu.array() * dij.array().abs2()).sum();
    }
  }
  const cxd trace = 0.5 * (p.u3[grid.upper_interface_index()] +
                           p.u3[nu + grid.lower_interface_index()]);

  EnergyBreakdown eb;
  eb.E0 = 0.5 * (magnetic - rhog * std::norm(trace));
  eb.E1 = 0.25 * viscous;
  eb.J = 0.5 * mass;
  eb.E = eb.E0 + s * eb.E1;
  return eb;
}

}  // namespace mhdrt

#pragma once

#include <Eigen/Dense>
#include <complex>
#include <utility>

namespace mhdrt {

/// One Chebyshev-Lobatto collocation layer on [lo, hi]: nodes ascending with
/// exact endpoints, spectral differentiation matrix and Clenshaw-Curtis
/// quadrature weights at the same nodes.
template <class Real>
struct LayerGridT {
  int n = 0;  // polynomial degree; n+1 nodes
  Real lo = Real(0), hi = Real(0);
  Eigen::Vector<Real, Eigen::Dynamic> nodes;
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> diff;
  Eigen::Vector<Real, Eigen::Dynamic> weights;

  Real length() const { return hi - lo; }
  int count() const { return n + 1; }
};

/// The two fluid layers: upper on (0, ell), lower on (-m, 0). The interface
/// x3 = 0 is the first upper node and the last lower node.
template <class Real>
struct TwoLayerGridT {
  LayerGridT<Real> upper;
  LayerGridT<Real> lower;

  int upper_interface_index() const { return 0; }
  int lower_interface_index() const { return lower.n; }
  Real ell() const { return upper.hi; }
  Real m() const { return -lower.lo; }
  int total_nodes() const { return upper.count() + lower.count(); }
};

using LayerGrid = LayerGridT<double>;
using TwoLayerGrid = TwoLayerGridT<double>;

template <class Real>
LayerGridT<Real> build_layer(int n, Real lo, Real hi);

template <class Real>
TwoLayerGridT<Real> build_grid(int n_upper, int n_lower, Real ell, Real m);

/// Degrees below 8 are rejected: too coarse for any of the verification runs.
TwoLayerGrid build(int n_upper, int n_lower, double ell, double m);

/// Spectral derivative at the nodes; exact for polynomials of degree <= n.
Eigen::VectorXcd differentiate(const LayerGrid& grid, const Eigen::VectorXcd& samples);

/// Clenshaw-Curtis sum over both layers.
std::complex<double> integrate(const TwoLayerGrid& grid,
                               const Eigen::VectorXcd& upper_samples,
                               const Eigen::VectorXcd& lower_samples);

/// One-sided values at x3 = 0, read off the interface nodes exactly.
std::pair<std::complex<double>, std::complex<double>>
interface_value(const TwoLayerGrid& grid,
                const Eigen::VectorXcd& upper_samples,
                const Eigen::VectorXcd& lower_samples);

// -- Chebyshev series helpers -------------------------------------------------
// Used by the high-accuracy residual evaluation and by the oracle samplers.

/// Chebyshev coefficients of the degree-n interpolant of ascending-node values.
template <class Real>
Eigen::Vector<std::complex<Real>, Eigen::Dynamic>
cheb_coefficients(const LayerGridT<Real>& grid,
                  const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& values);

/// Coefficients of the derivative, scaled for the physical interval of `grid`.
template <class Real>
Eigen::Vector<std::complex<Real>, Eigen::Dynamic>
cheb_derivative(const LayerGridT<Real>& grid,
                const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& coeffs);

/// Evaluate a coefficient vector at a physical point of the layer (Clenshaw).
template <class Real>
std::complex<Real> cheb_eval(const LayerGridT<Real>& grid,
                             const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& coeffs,
                             Real x);

/// Values of a coefficient vector at all nodes of the layer.
template <class Real>
Eigen::Vector<std::complex<Real>, Eigen::Dynamic>
cheb_values(const LayerGridT<Real>& grid,
            const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& coeffs);

/// Barycentric evaluation of the grid's interpolant at arbitrary points,
/// as a (points x nodes) matrix. Exact for polynomials of degree <= n.
template <class Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>
interpolation_matrix(const LayerGridT<Real>& from,
                     const Eigen::Vector<Real, Eigen::Dynamic>& to_points);

}  // namespace mhdrt

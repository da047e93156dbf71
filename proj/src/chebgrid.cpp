#include "mhdrt/chebgrid.hpp"

#include <cmath>
#include <stdexcept>

namespace mhdrt {

namespace {

template <class Real>
Real pi() {
  return std::acos(Real(-1));
}

// Clenshaw-Curtis weights on [-1, 1] for n+1 Lobatto nodes (symmetric in j).
template <class Real>
Eigen::Vector<Real, Eigen::Dynamic> clenshaw_curtis_reference(int n) {
  Eigen::Vector<Real, Eigen::Dynamic> w(n + 1);
  if (n == 0) {
    w[0] = Real(2);
    return w;
  }
  const Real p = pi<Real>();
  w[0] = w[n] = (n % 2 == 0) ? Real(1) / (Real(n) * n - 1) : Real(1) / (Real(n) * n);
  for (int j = 1; j < n; ++j) {
    const Real theta = p * Real(j) / Real(n);
    Real v = Real(1);
    for (int k = 1; k <= (n - 1) / 2; ++k) {
      v -= Real(2) * std::cos(Real(2 * k) * theta) / Real(4 * k * k - 1);
    }
    if (n % 2 == 0) {
      v -= std::cos(Real(n) * theta) / (Real(n) * n - 1);
    }
    w[j] = Real(2) * v / Real(n);
  }
  return w;
}

}  // namespace

template <class Real>
LayerGridT<Real> build_layer(int n, Real lo, Real hi) {
  if (n < 1 || !(hi > lo)) {
    throw std::invalid_argument("build_layer: need n >= 1 and hi > lo");
  }
  LayerGridT<Real> g;
  g.n = n;
  g.lo = lo;
  g.hi = hi;
  const Real p = pi<Real>();
  const Real half = (hi - lo) / Real(2);

  g.nodes.resize(n + 1);
  for (int j = 0; j <= n; ++j) {
    // ascending: (1 - cos(j pi / n)) / 2 runs from 0 to 1
    g.nodes[j] = lo + half * (Real(1) - std::cos(p * Real(j) / Real(n)));
  }
  g.nodes[0] = lo;  // endpoints exact
  g.nodes[n] = hi;

  // Barycentric differentiation; weights (-1)^j with halved endpoints are the
  // Chebyshev-Lobatto barycentric weights in either node ordering.
  Eigen::Vector<Real, Eigen::Dynamic> bary(n + 1);
  for (int j = 0; j <= n; ++j) {
    bary[j] = (j % 2 == 0) ? Real(1) : Real(-1);
  }
  bary[0] *= Real(0.5);
  bary[n] *= Real(0.5);

  g.diff.resize(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    Real rowsum = Real(0);
    for (int j = 0; j <= n; ++j) {
      if (i == j) continue;
      const Real d = (bary[j] / bary[i]) / (g.nodes[i] - g.nodes[j]);
      g.diff(i, j) = d;
      rowsum += d;
    }
    g.diff(i, i) = -rowsum;  // annihilates constants exactly
  }

  g.weights = clenshaw_curtis_reference<Real>(n) * half;
  return g;
}

template <class Real>
TwoLayerGridT<Real> build_grid(int n_upper, int n_lower, Real ell, Real m) {
  if (!(ell > 0) || !(m > 0)) {
    throw std::invalid_argument("build_grid: layer depths must be positive");
  }
  TwoLayerGridT<Real> g;
  g.upper = build_layer<Real>(n_upper, Real(0), ell);
  g.lower = build_layer<Real>(n_lower, -m, Real(0));
  return g;
}

TwoLayerGrid build(int n_upper, int n_lower, double ell, double m) {
  if (n_upper < 8 || n_lower < 8) {
    throw std::invalid_argument("build: polynomial degree must be >= 8 per layer");
  }
  return build_grid<double>(n_upper, n_lower, ell, m);
}

Eigen::VectorXcd differentiate(const LayerGrid& grid, const Eigen::VectorXcd& samples) {
  if (samples.size() != grid.count()) {
    throw std::invalid_argument("differentiate: sample length does not match grid");
  }
  return grid.diff.cast<std::complex<double>>() * samples;
}

std::complex<double> integrate(const TwoLayerGrid& grid,
                               const Eigen::VectorXcd& upper_samples,
                               const Eigen::VectorXcd& lower_samples) {
  if (upper_samples.size() != grid.upper.count() || lower_samples.size() != grid.lower.count()) {
    throw std::invalid_argument("integrate: sample length does not match grid");
  }
  std::complex<double> acc = 0.0;
  for (int j = 0; j < grid.upper.count(); ++j) acc += grid.upper.weights[j] * upper_samples[j];
  for (int j = 0; j < grid.lower.count(); ++j) acc += grid.lower.weights[j] * lower_samples[j];
  return acc;
}

std::pair<std::complex<double>, std::complex<double>>
interface_value(const TwoLayerGrid& grid,
                const Eigen::VectorXcd& upper_samples,
                const Eigen::VectorXcd& lower_samples) {
  return {upper_samples[grid.upper_interface_index()],
          lower_samples[grid.lower_interface_index()]};
}

template <class Real>
Eigen::Vector<std::complex<Real>, Eigen::Dynamic>
cheb_coefficients(const LayerGridT<Real>& grid,
                  const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& values) {
  const int n = grid.n;
  using C = std::complex<Real>;
  Eigen::Vector<C, Eigen::Dynamic> a(n + 1);
  const Real p = pi<Real>();
  // nodes[j] corresponds to t = -cos(j pi / n) in [-1, 1]
  for (int k = 0; k <= n; ++k) {
    C acc = C(0);
    for (int j = 0; j <= n; ++j) {
      const Real scale = (j == 0 || j == n) ? Real(0.5) : Real(1);
      // T_k(-cos(theta_j)) = (-1)^k cos(k theta_j)
      acc += scale * values[j] * std::cos(Real(k) * p * Real(j) / Real(n));
    }
    const Real sign = (k % 2 == 0) ? Real(1) : Real(-1);
    a[k] = acc * sign * Real(2) / Real(n);
  }
  a[0] *= Real(0.5);
  a[n] *= Real(0.5);
  return a;
}

template <class Real>
Eigen::Vector<std::complex<Real>, Eigen::Dynamic>
cheb_derivative(const LayerGridT<Real>& grid,
                const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& coeffs) {
  using C = std::complex<Real>;
  const int n = static_cast<int>(coeffs.size()) - 1;
  Eigen::Vector<C, Eigen::Dynamic> d = Eigen::Vector<C, Eigen::Dynamic>::Zero(std::max(n, 1));
  if (n >= 1) {
    // recurrence c'_{k-1} = c'_{k+1} + 2k c_k on [-1, 1]
    Eigen::Vector<C, Eigen::Dynamic> dp = Eigen::Vector<C, Eigen::Dynamic>::Zero(n + 2);
    for (int k = n; k >= 1; --k) {
      dp[k - 1] = dp[k + 1] + Real(2 * k) * coeffs[k];
    }
    dp[0] *= Real(0.5);
    d = dp.head(n);
  }
  const Real scale = Real(2) / grid.length();
  return d * scale;
}

template <class Real>
std::complex<Real> cheb_eval(const LayerGridT<Real>& grid,
                             const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& coeffs,
                             Real x) {
  using C = std::complex<Real>;
  const Real t = Real(2) * (x - grid.lo) / grid.length() - Real(1);
  // Clenshaw
  C b1 = C(0), b2 = C(0);
  for (int k = static_cast<int>(coeffs.size()) - 1; k >= 1; --k) {
    const C b0 = Real(2) * t * b1 - b2 + coeffs[k];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + coeffs[0];
}

template <class Real>
Eigen::Vector<std::complex<Real>, Eigen::Dynamic>
cheb_values(const LayerGridT<Real>& grid,
            const Eigen::Vector<std::complex<Real>, Eigen::Dynamic>& coeffs) {
  Eigen::Vector<std::complex<Real>, Eigen::Dynamic> out(grid.count());
  for (int j = 0; j < grid.count(); ++j) {
    out[j] = cheb_eval<Real>(grid, coeffs, grid.nodes[j]);
  }
  return out;
}

template <class Real>
Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>
interpolation_matrix(const LayerGridT<Real>& from,
                     const Eigen::Vector<Real, Eigen::Dynamic>& to_points) {
  const int n = from.n;
  Eigen::Vector<Real, Eigen::Dynamic> bary(n + 1);
  for (int j = 0; j <= n; ++j) bary[j] = (j % 2 == 0) ? Real(1) : Real(-1);
  bary[0] *= Real(0.5);
  bary[n] *= Real(0.5);

  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> P =
      Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>::Zero(to_points.size(), n + 1);
  for (int i = 0; i < to_points.size(); ++i) {
    const Real x = to_points[i];
    int hit = -1;
    for (int j = 0; j <= n; ++j) {
      if (x == from.nodes[j]) {
        hit = j;
        break;
      }
    }
    if (hit >= 0) {
      P(i, hit) = Real(1);
      continue;
    }
    Real denom = Real(0);
    for (int j = 0; j <= n; ++j) {
      const Real term = bary[j] / (x - from.nodes[j]);
      P(i, j) = term;
      denom += term;
    }
    P.row(i) /= denom;
  }
  return P;
}

// explicit instantiations
template LayerGridT<double> build_layer<double>(int, double, double);
template LayerGridT<long double> build_layer<long double>(int, long double, long double);
template TwoLayerGridT<double> build_grid<double>(int, int, double, double);
template TwoLayerGridT<long double> build_grid<long double>(int, int, long double, long double);

template Eigen::Vector<std::complex<double>, Eigen::Dynamic>
cheb_coefficients<double>(const LayerGridT<double>&,
                          const Eigen::Vector<std::complex<double>, Eigen::Dynamic>&);
template Eigen::Vector<std::complex<long double>, Eigen::Dynamic>
cheb_coefficients<long double>(const LayerGridT<long double>&,
                               const Eigen::Vector<std::complex<long double>, Eigen::Dynamic>&);
template Eigen::Vector<std::complex<double>, Eigen::Dynamic>
cheb_derivative<double>(const LayerGridT<double>&,
                        const Eigen::Vector<std::complex<double>, Eigen::Dynamic>&);
template Eigen::Vector<std::complex<long double>, Eigen::Dynamic>
cheb_derivative<long double>(const LayerGridT<long double>&,
                             const Eigen::Vector<std::complex<long double>, Eigen::Dynamic>&);
template std::complex<double> cheb_eval<double>(
    const LayerGridT<double>&, const Eigen::Vector<std::complex<double>, Eigen::Dynamic>&, double);
template std::complex<long double> cheb_eval<long double>(
    const LayerGridT<long double>&,
    const Eigen::Vector<std::complex<long double>, Eigen::Dynamic>&, long double);
template Eigen::Vector<std::complex<double>, Eigen::Dynamic>
cheb_values<double>(const LayerGridT<double>&,
                    const Eigen::Vector<std::complex<double>, Eigen::Dynamic>&);
template Eigen::Vector<std::complex<long double>, Eigen::Dynamic>
cheb_values<long double>(const LayerGridT<long double>&,
                         const Eigen::Vector<std::complex<long double>, Eigen::Dynamic>&);
template Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>
interpolation_matrix<double>(const LayerGridT<double>&,
                             const Eigen::Vector<double, Eigen::Dynamic>&);
template Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>
interpolation_matrix<long double>(const LayerGridT<long double>&,
                                  const Eigen::Vector<long double, Eigen::Dynamic>&);

}  // namespace mhdrt

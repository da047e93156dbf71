#pragma once

// Internal companion data carried by QuadForms: the J-whitened pencil (one
// Hermitian eigensolve per alpha evaluation instead of a fresh generalized
// reduction), the magnetic/surface split used by the energy ledger, and a
// lazily built extended-precision kernel shared across all forms from the
// same factory. The double-precision pencil floors eigenvalues near
// eps * ||C||, which is too coarse for the 1e-10 fixed-point tolerance at
// stiff wavevectors; the polish step reassembles the pencil in long double.

#include <Eigen/Dense>
#include <memory>
#include <mutex>

#include "assembly.hpp"

namespace mhdrt {

struct QuadForms;

namespace detail {

struct LdKernelHolder {
  std::once_flag flag;
  std::shared_ptr<const Kernel<long double>> kernel;
};

/// Extended-precision kernel for the forms' (grid, k); built on first use and
/// shared by every QuadForms created from the same factory.
const Kernel<long double>& ld_kernel(const QuadForms& forms);

}  // namespace detail

struct QuadFormsCache {
  Eigen::MatrixXcd W;    // J = W^{-H} W^{-1}; coordinates x = W y
  Eigen::MatrixXcd E0w;  // W^H E0 W
  Eigen::MatrixXcd E1w;  // W^H E1 W
  Eigen::MatrixXcd Mag;  // x^H Mag x = (1/2) Int |(B.grad) w|^2
  Eigen::MatrixXcd Sur;  // x^H Sur x = (1/2) [rho] g |w3(0)|^2
  std::shared_ptr<detail::LdKernelHolder> ld_holder;
};

}  // namespace mhdrt

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "param_store.hpp"

namespace protoforge {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int worst_row = -1, worst_col = -1;
  int checked = 0;
  int skipped_nonsmooth = 0;
  bool pass = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double eps = 1e-3;
  double tol = 1e-4;
  bool pass = true;

  std::string table() const;
};

/// loss_fn(true) must run forward and populate gradients in `params`;
/// loss_fn(false) must run forward only. Analytic gradients are compared
/// against central differences (f(x+eps) - f(x-eps)) / (2 eps) at
/// `coords_per_param` sampled coordinates of each listed parameter (all
/// coordinates when the parameter is smaller). Must run in 64-bit: central
/// differences are unreliable in 32-bit.
///
/// Coordinates where the loss is locally non-smooth (the one-sided slopes
/// disagree, e.g. a max-pool tie or a hinge boundary within eps) are excluded
/// from the error and counted in skipped_nonsmooth.
///
/// Throws DeterminismError when two forward passes disagree.
GradCheckReport grad_check(const std::function<double(bool)>& loss_fn,
                           ParamStore<double>& params,
                           const std::vector<std::string>& param_names, double eps, double tol,
                           int coords_per_param, Rng& rng);

}  // namespace protoforge

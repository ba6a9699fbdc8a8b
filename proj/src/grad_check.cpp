#include "grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace protoforge {

namespace {

// Rel error floor keeps coordinates whose true gradient is ~0 from turning
// finite-difference noise into spurious failures.
constexpr double kRelFloor = 1e-6;

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), kRelFloor});
}

// One-sided slopes that disagree mark a kink crossed within eps.
bool nonsmooth_at(double f0, double fp, double fm, double eps) {
  double fwd = (fp - f0) / eps;
  double bwd = (f0 - fm) / eps;
  double diff = std::fabs(fwd - bwd);
  return diff > 0.25 * std::max(std::fabs(fwd), std::fabs(bwd)) && diff > 1e-4;
}

}  // namespace

GradCheckReport grad_check(const std::function<double(bool)>& loss_fn,
                           ParamStore<double>& params,
                           const std::vector<std::string>& param_names, double eps, double tol,
                           int coords_per_param, Rng& rng) {
  GradCheckReport report;
  report.eps = eps;
  report.tol = tol;

  const double f0 = loss_fn(false);
  const double f0_again = loss_fn(false);
  if (f0 != f0_again)
    throw DeterminismError(strfmt("grad_check: two forward passes disagree (%.17g vs %.17g)",
                                  f0, f0_again));

  params.zero_grads();
  loss_fn(true);  // populate analytic gradients once

  for (const std::string& name : param_names) {
    Param<double>& p = params.get(name);
    GradCheckEntry entry;
    entry.param = name;

    const int total = static_cast<int>(p.value.size());
    std::vector<int> coords;
    if (total <= coords_per_param) {
      coords.resize(total);
      for (int i = 0; i < total; ++i) coords[i] = i;
    } else {
      coords = rng.sample_without_replacement(total, coords_per_param);
      std::sort(coords.begin(), coords.end());
    }

    for (int idx : coords) {
      const double saved = p.value[idx];
      p.value[idx] = saved + eps;
      const double fp = loss_fn(false);
      p.value[idx] = saved - eps;
      const double fm = loss_fn(false);
      p.value[idx] = saved;

      const double numeric = (fp - fm) / (2.0 * eps);
      const double analytic = p.grad[idx];
      const double err = rel_err(analytic, numeric);
      if (err > tol && nonsmooth_at(f0, fp, fm, eps)) {
        ++entry.skipped_nonsmooth;
        continue;
      }
      ++entry.checked;
      if (err > entry.max_rel_err) {
        entry.max_rel_err = err;
        entry.worst_analytic = analytic;
        entry.worst_numeric = numeric;
        entry.worst_row = idx / p.value.cols();
        entry.worst_col = idx % p.value.cols();
      }
    }
    entry.pass = entry.max_rel_err < tol;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

std::string GradCheckReport::table() const {
  std::ostringstream os;
  os << strfmt("%-16s %-6s %12s %8s %8s  %s\n", "param", "status", "max_rel_err", "checked",
               "skipped", "worst (analytic vs numeric @ row,col)");
  for (const auto& e : entries) {
    os << strfmt("%-16s %-6s %12.3e %8d %8d  %.6e vs %.6e @ %d,%d\n", e.param.c_str(),
                 e.pass ? "pass" : "FAIL", e.max_rel_err, e.checked, e.skipped_nonsmooth,
                 e.worst_analytic, e.worst_numeric, e.worst_row, e.worst_col);
  }
  os << strfmt("tolerance %.1e at eps %.1e: %s\n", tol, eps, pass ? "pass" : "FAIL");
  return os.str();
}

}  // namespace protoforge

#pragma once

// Central-difference gradient checking shared across the test suites. The
// oracle re-runs the full forward pass at perturbed parameter values, so it is
// independent of the tape's backward implementations.

#include <cmath>
#include <functional>
#include <string>

#include "cobev/params.hpp"
#include "cobev/tensor.hpp"

namespace cobev::testing {

struct FdResult {
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

inline double rel_err(double a, double b) {
  double denom = std::max({std::fabs(a), std::fabs(b), 1e-6});
  return std::fabs(a - b) / denom;
}

// loss_fn must evaluate the scalar loss from the store alone.
inline FdResult fd_check_param(const std::function<double(const ParamStore&)>& loss_fn,
                               ParamStore store, const std::string& name, int64_t index,
                               double analytic) {
  Tensor& arr = store.at(name);
  double orig = arr[index];
  double h = 1e-6 * std::max(1.0, std::fabs(orig));
  arr[index] = orig + h;
  double lp = loss_fn(store);
  arr[index] = orig - h;
  double lm = loss_fn(store);
  arr[index] = orig;
  FdResult r;
  r.analytic = analytic;
  r.numeric = (lp - lm) / (2.0 * h);
  r.rel_err = rel_err(r.analytic, r.numeric);
  return r;
}

}  // namespace cobev::testing

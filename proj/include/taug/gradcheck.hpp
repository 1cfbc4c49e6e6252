#pragma once

#include <functional>
#include <string>
#include <vector>

#include "taug/rng.hpp"
#include "taug/tensor.hpp"

namespace taug {

// Central-difference gradient estimate of f per coordinate of `param`. f must
// be deterministic across calls (reset internal rng streams per evaluation).
std::vector<Real> finite_diff_grad(const std::function<Real()>& f, Tensor& param,
                                   Real eps = 1e-5);
Real finite_diff_coord(const std::function<Real()>& f, Tensor& param, std::int64_t idx,
                       Real eps = 1e-5);

Real rel_err(Real analytic, Real numeric, Real floor);

struct GradCheckResult {
    std::string path;
    Real max_rel_err = 0;
    int coords_checked = 0;
    bool pass = true;
};

// One taped backward of build() against central differences on a sampled
// subset of coordinates of each parameter. build() is invoked repeatedly and
// must rebuild the same graph (same internal rng seeds) every time.
GradCheckResult check_gradients(const std::string& name,
                                const std::function<TensorPtr(Tape&)>& build,
                                const std::vector<TensorPtr>& params, int probes_per_param,
                                Real eps, Real tol, Real floor, RngStream& probe_rng);

struct GradSuiteOptions {
    int seeds = 10;
    bool sabotage = false;  // corrupts one backward rule; the suite must then fail
    Real tol = 1e-3;
};

// Finite-difference verification of every differentiable path: augmentation
// models, gates, affine resampler, SWD, and all objective kinds.
std::vector<GradCheckResult> run_gradcheck_suite(const GradSuiteOptions& opt);

}  // namespace taug

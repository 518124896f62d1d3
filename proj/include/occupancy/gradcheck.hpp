#pragma once

#include "occupancy/autodiff.hpp"

#include <functional>
#include <string>
#include <vector>

namespace occupancy::ad {

struct NamedTensor {
    std::string name;
    Tensor* tensor;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst;  // "<name>[<flat index>]"
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Relative error used throughout: |a - b| / max(1e-8, |a| + |b|).
double relative_error(double autodiff, double numeric);

// Central-difference check of a scalar function of one input tensor.
// f receives the tape and the input bound as a differentiable leaf.
double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h = 1e-5);

// Checks d f / d p for every element of every listed tensor. f must bind
// the tensors itself (Tape::leaf) and return a scalar. Tensors are restored
// to their original values and their grads cleared afterwards.
GradCheckResult grad_check_params(const std::function<Var(Tape&)>& f, const std::vector<NamedTensor>& params,
                                  double h = 1e-5);

} // namespace occupancy::ad

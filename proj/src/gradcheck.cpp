#include "occupancy/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace occupancy::ad {

double relative_error(double autodiff, double numeric) {
    return std::abs(autodiff - numeric) / std::max(1e-8, std::abs(autodiff) + std::abs(numeric));
}

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& x, double h) {
    Tensor input = x;
    input.set_requires_grad(true);
    input.clear_grad();
    auto g = [&](Tape& t) { return f(t, t.leaf(input)); };
    return grad_check_params(g, {{"x", &input}}, h).max_rel_error;
}

GradCheckResult grad_check_params(const std::function<Var(Tape&)>& f, const std::vector<NamedTensor>& params,
                                  double h) {
    std::vector<bool> saved_flags;
    for (const auto& p : params) {
        saved_flags.push_back(p.tensor->requires_grad());
        p.tensor->set_requires_grad(true);
        p.tensor->clear_grad();
    }
    {
        Tape tape;
        tape.backward(f(tape));
    }
    auto evaluate = [&] {
        Tape tape;
        return f(tape).value().item();
    };

    GradCheckResult result;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& t = *params[k].tensor;
        const std::vector<double> analytic = t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                                                          : std::vector<double>(t.size(), 0.0);
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double orig = t[i];
            t[i] = orig + h;
            const double up = evaluate();
            t[i] = orig - h;
            const double down = evaluate();
            t[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double err = relative_error(analytic[i], numeric);
            if (err > result.max_rel_error || std::isnan(err)) {
                result.max_rel_error = std::isnan(err) ? INFINITY : err;
                result.worst = params[k].name + "[" + std::to_string(i) + "]";
                result.worst_analytic = analytic[i];
                result.worst_numeric = numeric;
            }
        }
        t.clear_grad();
        t.set_requires_grad(saved_flags[k]);
    }
    return result;
}

} // namespace occupancy::ad

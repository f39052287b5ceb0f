#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "posef/core/autodiff.hpp"

namespace posef::ad {

namespace detail {

inline double checked_scalar(Var out) {
    const double v = out.value().item();
    if (!std::isfinite(v)) throw std::runtime_error("gradient_check: non-finite function value");
    return v;
}

inline double rel_error(double analytic, double numeric) {
    return std::fabs(analytic - numeric) / std::max(1.0, std::fabs(analytic));
}

}  // namespace detail

// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
inline double gradient_check(const std::function<Var(Tape&, Var)>& f, const Tensor& point, double eps = 1e-4) {
    if (!(eps > 0)) throw std::invalid_argument("gradient_check: eps must be > 0");
    Tensor analytic;
    {
        Tape tape;
        Var x = tape.variable(point);
        Var y = f(tape, x);
        detail::checked_scalar(y);
        analytic = tape.backward(y).wrt(x);
    }
    auto eval = [&](const Tensor& p) {
        Tape tape;
        return detail::checked_scalar(f(tape, tape.variable(p)));
    };
    double worst = 0.0;
    Tensor probe = point;
    for (std::size_t i = 0; i < point.size(); ++i) {
        probe[i] = point[i] + eps;
        const double up = eval(probe);
        probe[i] = point[i] - eps;
        const double down = eval(probe);
        probe[i] = point[i];
        worst = std::max(worst, detail::rel_error(analytic[i], (up - down) / (2.0 * eps)));
    }
    return worst;
}

// Same check over every coordinate of every tensor in a ParameterSet.
inline double gradient_check(const std::function<Var(Tape&)>& f, ParameterSet& params, double eps = 1e-4) {
    if (!(eps > 0)) throw std::invalid_argument("gradient_check: eps must be > 0");
    std::vector<Tensor> analytic;
    {
        Tape tape;
        Var y = f(tape);
        detail::checked_scalar(y);
        analytic = tape.backward(y).params(params);
    }
    auto eval = [&] {
        Tape tape;
        return detail::checked_scalar(f(tape));
    };
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        for (std::size_t i = 0; i < params[p].size(); ++i) {
            const double orig = params[p][i];
            params[p][i] = orig + eps;
            const double up = eval();
            params[p][i] = orig - eps;
            const double down = eval();
            params[p][i] = orig;
            worst = std::max(worst, detail::rel_error(analytic[p][i], (up - down) / (2.0 * eps)));
        }
    }
    return worst;
}

}  // namespace posef::ad

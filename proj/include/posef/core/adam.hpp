#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "posef/core/autodiff.hpp"
#include "posef/core/tensor.hpp"

namespace posef::ad {

struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    long step_count = 0;
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static AdamState like(const Tensor& param, double lr = 0.001, double beta1 = 0.9, double beta2 = 0.999,
                          double eps = 1e-8) {
        AdamState s{Tensor::zeros(param.shape()), Tensor::zeros(param.shape()), 0, lr, beta1, beta2, eps};
        s.validate();
        return s;
    }

    void validate() const {
        if (!(learning_rate > 0)) throw std::invalid_argument("adam: learning_rate must be > 0");
        if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
            throw std::invalid_argument("adam: betas must lie in [0, 1)");
        if (!(epsilon > 0)) throw std::invalid_argument("adam: epsilon must be > 0");
    }
};

// Bias-corrected Adam update in place.
inline void adam_step(Tensor& param, const Tensor& grad, AdamState& state) {
    if (param.shape() != grad.shape() || param.shape() != state.first_moment.shape() ||
        param.shape() != state.second_moment.shape())
        throw std::invalid_argument("adam_step: shape mismatch between param " + shape_str(param.shape()) +
                                    " and grad " + shape_str(grad.shape()));
    ++state.step_count;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    double* m = state.first_moment.data();
    double* v = state.second_moment.data();
    double* p = param.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double mh = m[i] / c1;
        const double vh = v[i] / c2;
        p[i] -= state.learning_rate * mh / (std::sqrt(vh) + state.epsilon);
    }
}

struct AdamOptions {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 0.0;  // global-norm clipping threshold; 0 disables
};

inline double global_norm(const std::vector<Tensor>& grads) {
    double s = 0.0;
    for (const auto& g : grads)
        for (double v : g.values()) s += v * v;
    return std::sqrt(s);
}

// Adam over every tensor of a ParameterSet.
class Adam {
   public:
    Adam(const ParameterSet& params, AdamOptions opts) : opts_(opts) {
        for (std::size_t i = 0; i < params.size(); ++i)
            states_.push_back(AdamState::like(params[i], opts.learning_rate, opts.beta1, opts.beta2, opts.epsilon));
    }

    void step(ParameterSet& params, std::vector<Tensor> grads) {
        if (grads.size() != params.size()) throw std::invalid_argument("Adam::step: gradient count mismatch");
        if (opts_.clip_norm > 0) {
            const double norm = global_norm(grads);
            if (norm > opts_.clip_norm) {
                const double f = opts_.clip_norm / norm;
                for (auto& g : grads)
                    for (double& v : g.values()) v *= f;
            }
        }
        for (std::size_t i = 0; i < params.size(); ++i) adam_step(params[i], grads[i], states_[i]);
    }

    const std::vector<AdamState>& states() const { return states_; }

   private:
    AdamOptions opts_;
    std::vector<AdamState> states_;
};

}  // namespace posef::ad

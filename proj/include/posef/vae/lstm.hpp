#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "posef/core/autodiff.hpp"
#include "posef/core/rng.hpp"

namespace posef::vae {

using ad::ParameterSet;
using ad::Tape;
using ad::Var;

// Stacked LSTM. Layer l owns one fused weight [(in_l + hidden) x 4*hidden]
// and bias [1 x 4*hidden]; gate column blocks are ordered i, f, o, g.
struct LstmParams {
    std::string prefix;
    std::size_t input_width = 0;
    std::size_t hidden = 0;
    std::size_t layers = 0;
    std::vector<std::size_t> weight_ids;
    std::vector<std::size_t> bias_ids;

    static LstmParams create(ParameterSet& set, std::string prefix, std::size_t input_width, std::size_t hidden,
                             std::size_t layers, Rng& rng) {
        if (input_width == 0 || hidden == 0 || layers == 0)
            throw std::invalid_argument("lstm: widths and layer count must be positive");
        LstmParams p{std::move(prefix), input_width, hidden, layers, {}, {}};
        for (std::size_t l = 0; l < layers; ++l) {
            const std::size_t in = (l == 0 ? input_width : hidden) + hidden;
            const double a = 1.0 / std::sqrt(static_cast<double>(hidden));
            Tensor w = Tensor::zeros({in, 4 * hidden});
            for (double& v : w.values()) v = rng.uniform(-a, a);
            Tensor b = Tensor::zeros({1, 4 * hidden});
            for (std::size_t j = hidden; j < 2 * hidden; ++j) b[j] = 1.0;  // forget gate
            p.weight_ids.push_back(set.add(p.prefix + ".w" + std::to_string(l), std::move(w)));
            p.bias_ids.push_back(set.add(p.prefix + ".b" + std::to_string(l), std::move(b)));
        }
        return p;
    }
};

struct LstmLayerState {
    Var h;
    Var c;
};
using LstmState = std::vector<LstmLayerState>;

inline LstmState lstm_zero_state(Tape& tape, const LstmParams& p, std::size_t batch) {
    LstmState s;
    for (std::size_t l = 0; l < p.layers; ++l)
        s.push_back({tape.constant(Tensor::zeros({batch, p.hidden})), tape.constant(Tensor::zeros({batch, p.hidden}))});
    return s;
}

inline LstmLayerState lstm_cell(Tape& tape, const ParameterSet& set, std::size_t w_id, std::size_t b_id,
                                std::size_t hidden, const LstmLayerState& s, Var x) {
    Var w = tape.param(set, w_id);
    Var b = tape.param(set, b_id);
    Var zin = ad::concat({x, s.h}, 1);
    Var z = ad::add(ad::matmul(zin, w), b);
    Var i = ad::sigmoid(ad::slice(z, 1, 0, hidden));
    Var f = ad::sigmoid(ad::slice(z, 1, hidden, 2 * hidden));
    Var o = ad::sigmoid(ad::slice(z, 1, 2 * hidden, 3 * hidden));
    Var g = ad::tanh(ad::slice(z, 1, 3 * hidden, 4 * hidden));
    Var c = f * s.c + i * g;
    Var h = o * ad::tanh(c);
    return {h, c};
}

// One time step through every layer; returns the new state. The top
// layer's h is the step output.
inline LstmState lstm_step(Tape& tape, const ParameterSet& set, const LstmParams& p, const LstmState& state, Var x) {
    if (x.value().rank() != 2 || x.cols() != p.input_width)
        throw std::invalid_argument("lstm_step(" + p.prefix + "): input width " + shape_str(x.shape()) +
                                    " does not match " + std::to_string(p.input_width));
    if (state.size() != p.layers) throw std::invalid_argument("lstm_step(" + p.prefix + "): layer count mismatch");
    LstmState next;
    next.reserve(p.layers);
    Var in = x;
    for (std::size_t l = 0; l < p.layers; ++l) {
        if (state[l].h.cols() != p.hidden || state[l].h.rows() != x.rows())
            throw std::invalid_argument("lstm_step(" + p.prefix + "): state shape mismatch");
        next.push_back(lstm_cell(tape, set, p.weight_ids[l], p.bias_ids[l], p.hidden, state[l], in));
        in = next.back().h;
    }
    return next;
}

}  // namespace posef::vae

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "posef/core/adam.hpp"
#include "posef/core/autodiff.hpp"
#include "posef/core/checkpoint.hpp"
#include "posef/core/rng.hpp"
#include "posef/eval/metrics.hpp"

namespace posef::eval {

using ad::ParameterSet;
using ad::Tape;
using ad::Var;

struct ClassifierConfig {
    std::size_t hidden = 64;
    std::size_t embed = 32;  // penultimate width
    std::size_t iterations = 600;
    std::size_t batch_size = 64;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"hidden", hidden},         {"embed", embed},
                {"iterations", iterations}, {"batch_size", batch_size},
                {"learning_rate", learning_rate}, {"seed", seed}};
    }
};

// input -> tanh(hidden) -> relu(embed) -> softmax(K). Inputs are
// standardized with the training mean and spread.
class Classifier {
   public:
    Classifier() = default;

    Classifier(std::size_t input_dim, std::size_t classes, const ClassifierConfig& cfg) : cfg_(cfg), classes_(classes) {
        if (input_dim == 0 || classes < 2 || cfg.hidden == 0 || cfg.embed == 0)
            throw std::invalid_argument("classifier: bad dimensions");
        Rng rng(cfg.seed, "classifier/init");
        auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
            const double a = std::sqrt(3.0 / static_cast<double>(in));
            Tensor w = Tensor::zeros({in, out});
            for (double& v : w.values()) v = rng.uniform(-a, a);
            params_.add(name + ".w", std::move(w));
            params_.add(name + ".b", Tensor::zeros({1, out}));
        };
        dense("hidden", input_dim, cfg.hidden);
        dense("embed", cfg.hidden, cfg.embed);
        dense("logits", cfg.embed, classes);
        params_.add("input.mean", Tensor::zeros({1, input_dim}));
        params_.add("input.scale", Tensor::filled({1, input_dim}, 1.0));
    }

    std::size_t input_dim() const { return params_["input.mean"].cols(); }
    std::size_t classes() const { return classes_; }
    std::size_t embed_dim() const { return cfg_.embed; }
    const ClassifierConfig& config() const { return cfg_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    void set_standardization(const FeatureSet& data) {
        const std::size_t d = input_dim();
        Tensor& mean = params_["input.mean"];
        Tensor& scale = params_["input.scale"];
        for (std::size_t i = 0; i < d; ++i) {
            double m = 0.0, s = 0.0;
            for (const auto& x : data) m += x[i];
            m /= static_cast<double>(data.size());
            for (const auto& x : data) s += (x[i] - m) * (x[i] - m);
            s = std::sqrt(s / static_cast<double>(data.size()));
            mean[i] = m;
            scale[i] = s > 1e-8 ? 1.0 / s : 1.0;
        }
    }

    Tensor stack(const FeatureSet& xs) const {
        const std::size_t d = input_dim();
        std::vector<double> v;
        v.reserve(xs.size() * d);
        for (const auto& x : xs) {
            if (x.size() != d)
                throw std::invalid_argument("classifier: input has " + std::to_string(x.size()) +
                                            " features, expected " + std::to_string(d));
            v.insert(v.end(), x.begin(), x.end());
        }
        return Tensor({xs.size(), d}, std::move(v));
    }

    Var embed(Tape& tape, Var x) const {
        Var z = (x - tape.constant(params_["input.mean"])) * tape.constant(params_["input.scale"]);
        Var h = ad::tanh(linear(tape, "hidden", z));
        return ad::relu(linear(tape, "embed", h));
    }

    Var logits(Tape& tape, Var x) const { return linear(tape, "logits", embed(tape, x)); }

    FeatureSet embed(const FeatureSet& xs) const {
        if (xs.empty()) return {};
        Tape tape;
        return rows(embed(tape, tape.constant(stack(xs))).value());
    }

    // Softmax rows.
    FeatureSet predict(const FeatureSet& xs) const {
        if (xs.empty()) return {};
        Tape tape;
        FeatureSet z = rows(logits(tape, tape.constant(stack(xs))).value());
        for (auto& r : z) {
            const double mx = *std::max_element(r.begin(), r.end());
            double s = 0.0;
            for (double& v : r) s += (v = std::exp(v - mx));
            for (double& v : r) v /= s;
        }
        return z;
    }

    std::vector<int> classify(const FeatureSet& xs) const {
        std::vector<int> out;
        for (const auto& p : predict(xs))
            out.push_back(static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin()));
        return out;
    }

   private:
    Var linear(Tape& tape, const std::string& name, Var x) const {
        return ad::add(ad::matmul(x, tape.param(params_, name + ".w")), tape.param(params_, name + ".b"));
    }

    static FeatureSet rows(const Tensor& t) {
        FeatureSet out(t.rows(), Vector(t.cols()));
        for (std::size_t r = 0; r < t.rows(); ++r)
            for (std::size_t c = 0; c < t.cols(); ++c) out[r][c] = t.at(r, c);
        return out;
    }

    ClassifierConfig cfg_;
    std::size_t classes_ = 0;
    ParameterSet params_;
};

// Mean cross-entropy of softmax(logits) against integer labels.
inline Var cross_entropy(Tape& tape, Var logits, const std::vector<int>& labels) {
    const Tensor& z = logits.value();
    const std::size_t b = z.rows(), k = z.cols();
    if (labels.size() != b) throw std::invalid_argument("cross_entropy: label count does not match batch");
    Tensor shift = Tensor::zeros({b, k}), onehot = Tensor::zeros({b, k});
    for (std::size_t r = 0; r < b; ++r) {
        double mx = z.at(r, 0);
        for (std::size_t c = 1; c < k; ++c) mx = std::max(mx, z.at(r, c));
        for (std::size_t c = 0; c < k; ++c) shift.at(r, c) = mx;
        onehot.at(r, static_cast<std::size_t>(labels[r])) = 1.0;
    }
    Var s = logits - tape.constant(shift);
    Var lse = ad::log(ad::matmul(ad::exp(s), tape.constant(Tensor::filled({k, 1}, 1.0))));
    return ad::scale(ad::sum(lse) - ad::sum(s * tape.constant(onehot)), 1.0 / static_cast<double>(b));
}

// Adam on cross-entropy over minibatches from stream ("classifier/batch", it).
inline Classifier train_classifier(const FeatureSet& data, const std::vector<int>& labels, std::size_t classes,
                                   const ClassifierConfig& cfg) {
    if (data.empty() || data.size() != labels.size())
        throw std::invalid_argument("train_classifier: need one label per example");
    std::set<int> present;
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= classes)
            throw std::invalid_argument("train_classifier: label " + std::to_string(y) + " outside [0, " +
                                        std::to_string(classes) + ")");
        present.insert(y);
    }
    if (present.size() < 2) throw std::invalid_argument("train_classifier: need at least 2 classes in the data");
    Classifier m(data.front().size(), classes, cfg);
    m.set_standardization(data);
    ad::AdamOptions o;
    o.learning_rate = cfg.learning_rate;
    ad::Adam adam(m.params(), o);
    const std::size_t bs = std::min(cfg.batch_size, data.size());
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        Rng rng(cfg.seed, "classifier/batch", it);
        FeatureSet xs;
        std::vector<int> ys;
        for (std::size_t i = 0; i < bs; ++i) {
            const std::size_t j = rng.index(data.size());
            xs.push_back(data[j]);
            ys.push_back(labels[j]);
        }
        Tape tape;
        Var loss = cross_entropy(tape, m.logits(tape, tape.constant(m.stack(xs))), ys);
        // input.mean / input.scale enter as constants, so their gradients stay zero
        adam.step(m.params(), tape.backward(loss).params(m.params()));
    }
    return m;
}

inline double accuracy(const Classifier& m, const FeatureSet& xs, const std::vector<int>& labels) {
    const auto pred = m.classify(xs);
    std::size_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

inline void save_classifier(const Classifier& m, const std::filesystem::path& path) {
    ad::save_checkpoint(path, m.params());
    std::ofstream os(path.string() + ".json");
    if (!os) throw std::runtime_error("cannot write " + path.string() + ".json");
    nlohmann::json j = m.config().to_json();
    j["model"] = "classifier";
    j["input_dim"] = m.input_dim();
    j["classes"] = m.classes();
    os << j.dump(2) << '\n';
}

inline Classifier load_classifier(const std::filesystem::path& path) {
    std::ifstream is(path.string() + ".json");
    if (!is) throw std::runtime_error("cannot read " + path.string() + ".json");
    const auto j = nlohmann::json::parse(is);
    ClassifierConfig c;
    c.hidden = j.at("hidden").get<std::size_t>();
    c.embed = j.at("embed").get<std::size_t>();
    c.iterations = j.at("iterations").get<std::size_t>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    Classifier m(j.at("input_dim").get<std::size_t>(), j.at("classes").get<std::size_t>(), c);
    ad::assign_parameters(m.params(), ad::load_checkpoint(path));
    return m;
}

}  // namespace posef::eval

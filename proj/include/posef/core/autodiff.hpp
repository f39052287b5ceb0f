#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posef/core/tensor.hpp"

namespace posef::ad {

enum class Op {
    leaf,
    matmul,
    add,
    sub,
    mul,
    scale,
    concat,
    slice,
    tanh,
    sigmoid,
    relu,
    leaky_relu,
    exp,
    log,
    square,
    sum,
    mean,
    abs,
    clamp,
    reshape,
    gather,
    scatter_add,
};

inline const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::matmul: return "matmul";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "elementwise-mul";
        case Op::scale: return "scale";
        case Op::concat: return "concat";
        case Op::slice: return "slice";
        case Op::tanh: return "tanh";
        case Op::sigmoid: return "sigmoid";
        case Op::relu: return "relu";
        case Op::leaky_relu: return "leaky-relu";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::square: return "square";
        case Op::sum: return "reduce-sum";
        case Op::mean: return "reduce-mean";
        case Op::abs: return "l1-abs";
        case Op::clamp: return "clamp";
        case Op::reshape: return "reshape";
        case Op::gather: return "gather";
        case Op::scatter_add: return "scatter-add";
    }
    return "?";
}

inline constexpr double kLeakySlope = 0.2;

using IndexMap = std::shared_ptr<const std::vector<std::int64_t>>;

// Named, ordered trainable tensors. Indices are stable once added.
class ParameterSet {
   public:
    std::size_t add(std::string name, Tensor init) {
        if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
        by_name_.emplace(name, values_.size());
        names_.push_back(std::move(name));
        values_.push_back(std::move(init));
        return values_.size() - 1;
    }

    std::size_t index(std::string_view name) const {
        auto it = by_name_.find(std::string(name));
        if (it == by_name_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
        return it->second;
    }
    bool contains(std::string_view name) const { return by_name_.count(std::string(name)) > 0; }

    std::size_t size() const { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    Tensor& operator[](std::size_t i) { return values_.at(i); }
    const Tensor& operator[](std::size_t i) const { return values_.at(i); }
    Tensor& operator[](std::string_view name) { return values_[index(name)]; }
    const Tensor& operator[](std::string_view name) const { return values_[index(name)]; }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& t : values_) n += t.size();
        return n;
    }

    void fill(double v) {
        for (auto& t : values_)
            for (double& x : t.values()) x = v;
    }

    friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
        return a.names_ == b.names_ && a.values_ == b.values_;
    }

   private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::map<std::string, std::size_t> by_name_;
};

class Tape;

// Handle to a node on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

struct Node {
    Op op = Op::leaf;
    std::vector<std::size_t> inputs;
    Tensor value;
    double a = 0.0;  // slope, scale factor or lower clamp bound
    double b = 0.0;  // upper clamp bound
    std::size_t axis = 0, begin = 0, end = 0;
    IndexMap index;
    const ParameterSet* owner = nullptr;
    std::int64_t param = -1;
    bool needs_grad = false;
};

class Gradients;

// Records a forward computation for reverse-mode differentiation. Node ids
// are assigned in creation order, so every input id precedes its consumer.
class Tape {
   public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value) { return push(Op::leaf, {}, std::move(value), false); }

    Var variable(Tensor value) { return push(Op::leaf, {}, std::move(value), true); }

    Var param(const ParameterSet& set, std::size_t index) {
        auto key = std::make_pair(&set, index);
        if (auto it = bound_.find(key); it != bound_.end()) return Var{this, it->second};
        Var v = push(Op::leaf, {}, set[index], true);
        nodes_[v.id].owner = &set;
        nodes_[v.id].param = static_cast<std::int64_t>(index);
        bound_.emplace(key, v.id);
        return v;
    }
    Var param(const ParameterSet& set, std::string_view name) { return param(set, set.index(name)); }

    Var detach(Var v) { return constant(v.value()); }

    const Node& node(std::size_t id) const { return nodes_.at(id); }
    std::size_t size() const { return nodes_.size(); }

    Var push(Op op, std::vector<std::size_t> inputs, Tensor value, bool needs_grad) {
        Node n;
        n.op = op;
        n.inputs = std::move(inputs);
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        for (std::size_t in : n.inputs) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
        nodes_.push_back(std::move(n));
        return Var{this, nodes_.size() - 1};
    }
    Node& last() { return nodes_.back(); }

    Gradients backward(Var output) const;

   private:
    std::vector<Node> nodes_;
    std::map<std::pair<const ParameterSet*, std::size_t>, std::size_t> bound_;
};

inline const Tensor& Var::value() const { return tape->node(id).value; }

// Adjoints for every node reachable from the differentiated output.
class Gradients {
   public:
    Gradients(const Tape* tape, std::vector<Tensor> adj, std::vector<bool> has)
        : tape_(tape), adj_(std::move(adj)), has_(std::move(has)) {}

    // Zero-shaped gradient when the node does not reach the output.
    Tensor wrt(Var v) const {
        if (v.id < has_.size() && has_[v.id]) return adj_[v.id];
        return Tensor::zeros(v.value().shape());
    }

    // Gradient per parameter of `set`, zero for parameters not on the path.
    std::vector<Tensor> params(const ParameterSet& set) const {
        std::vector<Tensor> out;
        out.reserve(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) out.push_back(Tensor::zeros(set[i].shape()));
        for (std::size_t id = 0; id < tape_->size(); ++id) {
            const Node& n = tape_->node(id);
            if (n.owner == &set && n.param >= 0 && has_[id]) out[static_cast<std::size_t>(n.param)] = adj_[id];
        }
        return out;
    }

   private:
    const Tape* tape_;
    std::vector<Tensor> adj_;
    std::vector<bool> has_;
};

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

inline Tape* tape_of(Var a, Var b) {
    if (a.tape != b.tape || a.tape == nullptr) throw std::invalid_argument("operands live on different tapes");
    return a.tape;
}

[[noreturn]] inline void shape_error(Op op, const Shape& a, const Shape& b) {
    throw std::invalid_argument(std::string(op_name(op)) + ": incompatible shapes " + shape_str(a) + " and " +
                                shape_str(b));
}

template <class F>
Var unary(Op op, Var x, F f, double a = 0.0) {
    const Tensor& xv = x.value();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xv[i]);
    Var r = x.tape->push(op, {x.id}, Tensor(xv.shape(), std::move(out)), false);
    x.tape->last().a = a;
    return r;
}

// Same shape, or `b` a [1,n] row broadcast over the rows of a rank-2 `a`.
inline bool row_broadcast(const Tensor& a, const Tensor& b) {
    return a.rank() == 2 && b.rank() == 2 && b.shape()[0] == 1 && b.shape()[1] == a.shape()[1] && a.shape()[0] > 1;
}

template <class F>
Var binary(Op op, Var x, Var y, F f) {
    Tape* t = tape_of(x, y);
    const Tensor& a = x.value();
    const Tensor& b = y.value();
    std::vector<double> out(a.size());
    if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
    } else if (row_broadcast(a, b)) {
        const std::size_t n = b.size();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i % n]);
    } else {
        shape_error(op, a.shape(), b.shape());
    }
    return t->push(op, {x.id, y.id}, Tensor(a.shape(), std::move(out)), false);
}

}  // namespace detail

inline Var matmul(Var x, Var y) {
    Tape* t = detail::tape_of(x, y);
    const Tensor& a = x.value();
    const Tensor& b = y.value();
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) detail::shape_error(Op::matmul, a.shape(), b.shape());
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    std::vector<double> out(m * n);
    detail::Map(out.data(), m, n).noalias() = detail::MapC(a.data(), m, k) * detail::MapC(b.data(), k, n);
    return t->push(Op::matmul, {x.id, y.id}, Tensor({m, n}, std::move(out)), false);
}

inline Var add(Var a, Var b) { return detail::binary(Op::add, a, b, [](double u, double v) { return u + v; }); }
inline Var sub(Var a, Var b) { return detail::binary(Op::sub, a, b, [](double u, double v) { return u - v; }); }
inline Var mul(Var a, Var b) { return detail::binary(Op::mul, a, b, [](double u, double v) { return u * v; }); }

inline Var scale(Var x, double c) {
    return detail::unary(Op::scale, x, [c](double v) { return c * v; }, c);
}

inline Var tanh(Var x) { return detail::unary(Op::tanh, x, [](double v) { return std::tanh(v); }); }
inline Var sigmoid(Var x) {
    return detail::unary(Op::sigmoid, x, [](double v) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    });
}
inline Var relu(Var x) { return detail::unary(Op::relu, x, [](double v) { return v > 0 ? v : 0.0; }); }
inline Var leaky_relu(Var x, double slope = kLeakySlope) {
    return detail::unary(Op::leaky_relu, x, [slope](double v) { return v > 0 ? v : slope * v; }, slope);
}
inline Var exp(Var x) { return detail::unary(Op::exp, x, [](double v) { return std::exp(v); }); }
inline Var log(Var x) {
    for (double v : x.value().values())
        if (!(v > 0)) throw std::invalid_argument("log: non-positive input " + std::to_string(v));
    return detail::unary(Op::log, x, [](double v) { return std::log(v); });
}
inline Var square(Var x) { return detail::unary(Op::square, x, [](double v) { return v * v; }); }
inline Var abs(Var x) { return detail::unary(Op::abs, x, [](double v) { return std::fabs(v); }); }

inline Var clamp(Var x, double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
    Var r = detail::unary(Op::clamp, x, [lo, hi](double v) { return std::clamp(v, lo, hi); }, lo);
    x.tape->last().b = hi;
    return r;
}

inline Var sum(Var x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return x.tape->push(Op::sum, {x.id}, Tensor::scalar(s), false);
}

inline Var mean(Var x) {
    double s = 0.0;
    for (double v : x.value().values()) s += v;
    return x.tape->push(Op::mean, {x.id}, Tensor::scalar(s / static_cast<double>(x.value().size())), false);
}

inline Var reshape(Var x, Shape shape) {
    return x.tape->push(Op::reshape, {x.id}, x.value().reshaped(std::move(shape)), false);
}

// Concatenation of rank-2 tensors along axis 0 (rows) or 1 (columns).
inline Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    if (axis > 1) throw std::invalid_argument("concat: axis must be 0 or 1");
    Tape* t = parts[0].tape;
    const Tensor& first = parts[0].value();
    if (first.rank() != 2) throw std::invalid_argument("concat: rank-2 inputs required, got " + shape_str(first.shape()));
    std::size_t total = 0;
    std::vector<std::size_t> ids;
    for (const Var& p : parts) {
        detail::tape_of(parts[0], p);
        const Tensor& v = p.value();
        if (v.rank() != 2 || v.shape()[1 - axis] != first.shape()[1 - axis])
            detail::shape_error(Op::concat, first.shape(), v.shape());
        total += v.shape()[axis];
        ids.push_back(p.id);
    }
    const std::size_t rows = axis == 0 ? total : first.shape()[0];
    const std::size_t cols = axis == 1 ? total : first.shape()[1];
    std::vector<double> out(rows * cols);
    std::size_t offset = 0;
    for (const Var& p : parts) {
        const Tensor& v = p.value();
        const std::size_t r = v.shape()[0], c = v.shape()[1];
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) {
                if (axis == 0)
                    out[(offset + i) * cols + j] = v[i * c + j];
                else
                    out[i * cols + offset + j] = v[i * c + j];
            }
        offset += v.shape()[axis];
    }
    Var res = t->push(Op::concat, std::move(ids), Tensor({rows, cols}, std::move(out)), false);
    t->last().axis = axis;
    return res;
}

// Half-open range [begin, end) of a rank-2 tensor along `axis`.
inline Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Tensor& v = x.value();
    if (v.rank() != 2 || axis > 1 || begin >= end || end > v.shape()[axis])
        throw std::invalid_argument("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                                    ") on axis " + std::to_string(axis) + " invalid for " + shape_str(v.shape()));
    const std::size_t r = v.shape()[0], c = v.shape()[1];
    const std::size_t rows = axis == 0 ? end - begin : r;
    const std::size_t cols = axis == 1 ? end - begin : c;
    std::vector<double> out(rows * cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            out[i * cols + j] = axis == 0 ? v[(begin + i) * c + j] : v[i * c + begin + j];
    Var res = x.tape->push(Op::slice, {x.id}, Tensor({rows, cols}, std::move(out)), false);
    Node& n = x.tape->last();
    n.axis = axis;
    n.begin = begin;
    n.end = end;
    return res;
}

// out[i] = x[index[i]], or 0 where index[i] < 0. Used for patch extraction.
inline Var gather(Var x, IndexMap index, Shape out_shape) {
    if (!index || index->size() != shape_numel(out_shape))
        throw std::invalid_argument("gather: index size does not match output " + shape_str(out_shape));
    const Tensor& v = x.value();
    std::vector<double> out(index->size());
    const auto& idx = *index;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::int64_t j = idx[i];
        if (j >= static_cast<std::int64_t>(v.size())) throw std::out_of_range("gather: index out of range");
        out[i] = j >= 0 ? v[static_cast<std::size_t>(j)] : 0.0;
    }
    Var res = x.tape->push(Op::gather, {x.id}, Tensor(std::move(out_shape), std::move(out)), false);
    x.tape->last().index = std::move(index);
    return res;
}

// out[index[i]] += x[i] for index[i] >= 0. Adjoint of gather.
inline Var scatter_add(Var x, IndexMap index, Shape out_shape) {
    const Tensor& v = x.value();
    if (!index || index->size() != v.size())
        throw std::invalid_argument("scatter-add: index size does not match input " + shape_str(v.shape()));
    std::vector<double> out(shape_numel(out_shape), 0.0);
    const auto& idx = *index;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::int64_t j = idx[i];
        if (j < 0) continue;
        if (j >= static_cast<std::int64_t>(out.size())) throw std::out_of_range("scatter-add: index out of range");
        out[static_cast<std::size_t>(j)] += v[i];
    }
    Var res = x.tape->push(Op::scatter_add, {x.id}, Tensor(std::move(out_shape), std::move(out)), false);
    x.tape->last().index = std::move(index);
    return res;
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator-(Var a) { return scale(a, -1.0); }

inline Gradients Tape::backward(Var output) const {
    if (output.tape != this) throw std::invalid_argument("backward: output is not on this tape");
    if (output.value().size() != 1)
        throw std::invalid_argument("backward: output must be scalar, got " + shape_str(output.value().shape()));

    std::vector<Tensor> adj(nodes_.size());
    std::vector<bool> has(nodes_.size(), false);
    auto accum = [&](std::size_t id) -> Tensor& {
        if (!has[id]) {
            adj[id] = Tensor::zeros(nodes_[id].value.shape());
            has[id] = true;
        }
        return adj[id];
    };
    accum(output.id)[0] = 1.0;

    using detail::Map;
    using detail::MapC;

    for (std::size_t id = output.id + 1; id-- > 0;) {
        if (!has[id]) continue;
        const Node& n = nodes_[id];
        if (n.op == Op::leaf) continue;
        const Tensor& g = adj[id];
        const Tensor& y = n.value;
        auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].needs_grad; };
        auto in = [&](std::size_t k) -> const Tensor& { return nodes_[n.inputs[k]].value; };

        switch (n.op) {
            case Op::leaf:
                break;
            case Op::matmul: {
                const Tensor& a = in(0);
                const Tensor& b = in(1);
                const std::size_t m = a.shape()[0], k = a.shape()[1], c = b.shape()[1];
                if (wants(0)) {
                    Tensor& ga = accum(n.inputs[0]);
                    Map(ga.data(), m, k).noalias() += MapC(g.data(), m, c) * MapC(b.data(), k, c).transpose();
                }
                if (wants(1)) {
                    Tensor& gb = accum(n.inputs[1]);
                    Map(gb.data(), k, c).noalias() += MapC(a.data(), m, k).transpose() * MapC(g.data(), m, c);
                }
                break;
            }
            case Op::add:
            case Op::sub:
            case Op::mul: {
                const Tensor& a = in(0);
                const Tensor& b = in(1);
                const bool bcast = a.shape() != b.shape();
                const std::size_t nb = b.size();
                if (wants(0)) {
                    Tensor& ga = accum(n.inputs[0]);
                    for (std::size_t i = 0; i < g.size(); ++i)
                        ga[i] += n.op == Op::mul ? g[i] * b[bcast ? i % nb : i] : g[i];
                }
                if (wants(1)) {
                    Tensor& gb = accum(n.inputs[1]);
                    const double sign = n.op == Op::sub ? -1.0 : 1.0;
                    for (std::size_t i = 0; i < g.size(); ++i)
                        gb[bcast ? i % nb : i] += n.op == Op::mul ? g[i] * a[i] : sign * g[i];
                }
                break;
            }
            case Op::concat: {
                const std::size_t cols = y.shape()[1];
                std::size_t offset = 0;
                for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                    const Tensor& v = in(k);
                    const std::size_t r = v.shape()[0], c = v.shape()[1];
                    if (wants(k)) {
                        Tensor& gv = accum(n.inputs[k]);
                        for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                                gv[i * c + j] += n.axis == 0 ? g[(offset + i) * cols + j] : g[i * cols + offset + j];
                    }
                    offset += v.shape()[n.axis];
                }
                break;
            }
            case Op::slice: {
                Tensor& gx = accum(n.inputs[0]);
                const std::size_t c = in(0).shape()[1];
                const std::size_t rows = y.shape()[0], cols = y.shape()[1];
                for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < cols; ++j) {
                        const std::size_t src = n.axis == 0 ? (n.begin + i) * c + j : i * c + n.begin + j;
                        gx[src] += g[i * cols + j];
                    }
                break;
            }
            case Op::gather: {
                Tensor& gx = accum(n.inputs[0]);
                const auto& idx = *n.index;
                for (std::size_t i = 0; i < idx.size(); ++i)
                    if (idx[i] >= 0) gx[static_cast<std::size_t>(idx[i])] += g[i];
                break;
            }
            case Op::scatter_add: {
                Tensor& gx = accum(n.inputs[0]);
                const auto& idx = *n.index;
                for (std::size_t i = 0; i < idx.size(); ++i)
                    if (idx[i] >= 0) gx[i] += g[static_cast<std::size_t>(idx[i])];
                break;
            }
            case Op::sum:
            case Op::mean: {
                Tensor& gx = accum(n.inputs[0]);
                const double d = n.op == Op::sum ? g[0] : g[0] / static_cast<double>(gx.size());
                for (double& v : gx.values()) v += d;
                break;
            }
            case Op::reshape: {
                Tensor& gx = accum(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                break;
            }
            default: {
                // Elementwise unary ops.
                const Tensor& x = in(0);
                Tensor& gx = accum(n.inputs[0]);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    double d = 0.0;
                    switch (n.op) {
                        case Op::scale: d = n.a; break;
                        case Op::tanh: d = 1.0 - y[i] * y[i]; break;
                        case Op::sigmoid: d = y[i] * (1.0 - y[i]); break;
                        case Op::relu: d = x[i] > 0 ? 1.0 : 0.0; break;
                        case Op::leaky_relu: d = x[i] > 0 ? 1.0 : n.a; break;
                        case Op::exp: d = y[i]; break;
                        case Op::log: d = 1.0 / x[i]; break;
                        case Op::square: d = 2.0 * x[i]; break;
                        case Op::abs: d = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0); break;
                        case Op::clamp: d = (x[i] >= n.a && x[i] <= n.b) ? 1.0 : 0.0; break;
                        default: throw std::logic_error("backward: unhandled op");
                    }
                    gx[i] += g[i] * d;
                }
                break;
            }
        }
    }
    return Gradients(this, std::move(adj), std::move(has));
}

}  // namespace posef::ad

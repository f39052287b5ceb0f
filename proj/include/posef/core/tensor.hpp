#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace posef {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

inline std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// Dense row-major tensor of 64-bit reals. Extents are positive, values finite.
class Tensor {
   public:
    Tensor() : shape_{1}, values_(1, 0.0) {}

    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false)
        : shape_(std::move(shape)), values_(std::move(values)), requires_grad_(requires_grad) {
        validate();
    }

    static Tensor zeros(Shape shape) {
        const std::size_t n = checked_numel(shape);
        return Tensor(std::move(shape), std::vector<double>(n, 0.0));
    }

    static Tensor filled(Shape shape, double value) {
        const std::size_t n = checked_numel(shape);
        return Tensor(std::move(shape), std::vector<double>(n, value));
    }

    static Tensor scalar(double value) { return Tensor({1}, {value}); }

    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
        return Tensor({rows, cols}, std::move(values));
    }

    static Tensor row(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor({1, n}, std::move(values));
    }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return values_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

    // Matrix view: rank-1 tensors read as a single row.
    std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : 1; }
    std::size_t cols() const { return shape_.size() >= 2 ? size() / shape_[0] : size(); }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const double* data() const { return values_.data(); }
    double* data() { return values_.data(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
    double item() const {
        if (values_.size() != 1) throw std::invalid_argument("item(): tensor is not scalar " + shape_str(shape_));
        return values_[0];
    }

    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool v) { requires_grad_ = v; }

    Tensor reshaped(Shape shape) const {
        if (shape_numel(shape) != size())
            throw std::invalid_argument("reshape: " + shape_str(shape_) + " to " + shape_str(shape));
        return Tensor(std::move(shape), values_, requires_grad_);
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.values_ == b.values_;
    }

   private:
    static std::size_t checked_numel(const Shape& shape) {
        if (shape.empty()) throw std::invalid_argument("tensor shape must have at least one extent");
        for (std::size_t e : shape)
            if (e == 0) throw std::invalid_argument("tensor extents must be positive, got " + shape_str(shape));
        return shape_numel(shape);
    }

    void validate() const {
        const std::size_t n = checked_numel(shape_);
        if (n != values_.size())
            throw std::invalid_argument("tensor " + shape_str(shape_) + " expects " + std::to_string(n) +
                                        " values, got " + std::to_string(values_.size()));
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw std::invalid_argument("non-finite tensor value at index " + std::to_string(i));
    }

    Shape shape_;
    std::vector<double> values_;
    bool requires_grad_ = false;
};

}  // namespace posef

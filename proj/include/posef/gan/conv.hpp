#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "posef/core/autodiff.hpp"
#include "posef/core/rng.hpp"

namespace posef::gan {

using ad::IndexMap;
using ad::Var;

inline constexpr std::size_t kKernel = 4;
inline constexpr std::size_t kTaps = kKernel * kKernel * kKernel;

// Space-time grid of a batch of feature maps. A feature map is a
// [batch*frames*height*width, channels] matrix with rows ordered
// ((m*F + f)*H + y)*W + x.
struct Grid {
    std::size_t batch = 1, frames = 1, height = 1, width = 1;

    std::size_t rows() const { return batch * frames * height * width; }
    std::size_t row(std::size_t m, std::size_t f, std::size_t y, std::size_t x) const {
        return ((m * frames + f) * height + y) * width + x;
    }
    friend bool operator==(const Grid&, const Grid&) = default;
};

// Kernel 4, stride 2, padding 1 maps n to ceil(n/2) (n/2 for even n).
inline std::size_t halve(std::size_t n) { return (n + 1) / 2; }
inline Grid downsample(Grid g) { return {g.batch, halve(g.frames), halve(g.height), halve(g.width)}; }

namespace detail {

using Key = std::tuple<int, std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,
                       std::size_t, std::size_t>;

inline IndexMap cached(const Key& key, const std::function<std::vector<std::int64_t>()>& build) {
    static std::mutex mu;
    static std::map<Key, IndexMap> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto map = std::make_shared<const std::vector<std::int64_t>>(build());
    cache.emplace(key, map);
    return map;
}

// Input coordinate read by output o through tap k, or -1 in the padding.
inline std::int64_t tap(std::size_t o, std::size_t k, std::size_t n) {
    const auto i = static_cast<std::int64_t>(2 * o + k) - 1;
    return i >= 0 && i < static_cast<std::int64_t>(n) ? i : -1;
}

}  // namespace detail

// Gather map for the patch matrix [out.rows(), 64*C]; column
// ((kf*4 + kh)*4 + kw)*C + c.
inline IndexMap conv_patch_index(const Grid& in, std::size_t channels) {
    const Grid out = downsample(in);
    const detail::Key key{0, in.batch, in.frames, in.height, in.width, channels, 0, 0, 0, 0};
    return detail::cached(key, [&] {
        std::vector<std::int64_t> idx(out.rows() * kTaps * channels, -1);
        std::size_t pos = 0;
        for (std::size_t m = 0; m < out.batch; ++m)
            for (std::size_t f = 0; f < out.frames; ++f)
                for (std::size_t y = 0; y < out.height; ++y)
                    for (std::size_t x = 0; x < out.width; ++x)
                        for (std::size_t kf = 0; kf < kKernel; ++kf)
                            for (std::size_t kh = 0; kh < kKernel; ++kh)
                                for (std::size_t kw = 0; kw < kKernel; ++kw) {
                                    const auto sf = detail::tap(f, kf, in.frames);
                                    const auto sy = detail::tap(y, kh, in.height);
                                    const auto sx = detail::tap(x, kw, in.width);
                                    const bool inside = sf >= 0 && sy >= 0 && sx >= 0;
                                    const std::size_t r =
                                        inside ? in.row(m, static_cast<std::size_t>(sf), static_cast<std::size_t>(sy),
                                                        static_cast<std::size_t>(sx))
                                               : 0;
                                    for (std::size_t c = 0; c < channels; ++c, ++pos)
                                        if (inside) idx[pos] = static_cast<std::int64_t>(r * channels + c);
                                }
        return idx;
    });
}

// Scatter map from [in.rows(), 64*C] tap contributions onto an output grid.
// Output o receives input i through tap k when o = 2i - 1 + k.
inline IndexMap deconv_scatter_index(const Grid& in, const Grid& out, std::size_t channels) {
    const detail::Key key{1, in.batch, in.frames, in.height, in.width, channels, out.frames, out.height, out.width, 0};
    return detail::cached(key, [&] {
        std::vector<std::int64_t> idx(in.rows() * kTaps * channels, -1);
        std::size_t pos = 0;
        for (std::size_t m = 0; m < in.batch; ++m)
            for (std::size_t f = 0; f < in.frames; ++f)
                for (std::size_t y = 0; y < in.height; ++y)
                    for (std::size_t x = 0; x < in.width; ++x)
                        for (std::size_t kf = 0; kf < kKernel; ++kf)
                            for (std::size_t kh = 0; kh < kKernel; ++kh)
                                for (std::size_t kw = 0; kw < kKernel; ++kw) {
                                    const auto of = detail::tap(f, kf, out.frames);
                                    const auto oy = detail::tap(y, kh, out.height);
                                    const auto ox = detail::tap(x, kw, out.width);
                                    const bool inside = of >= 0 && oy >= 0 && ox >= 0;
                                    const std::size_t r =
                                        inside ? out.row(m, static_cast<std::size_t>(of), static_cast<std::size_t>(oy),
                                                         static_cast<std::size_t>(ox))
                                               : 0;
                                    for (std::size_t c = 0; c < channels; ++c, ++pos)
                                        if (inside) idx[pos] = static_cast<std::int64_t>(r * channels + c);
                                }
        return idx;
    });
}

// x: [in.rows(), Cin], w: [64*Cin, Cout], b: [1, Cout] -> [downsample(in).rows(), Cout].
inline Var conv3d(Var x, const Grid& in, Var w, Var b) {
    if (x.rows() != in.rows())
        throw std::invalid_argument("conv3d: input has " + std::to_string(x.rows()) + " rows, grid needs " +
                                    std::to_string(in.rows()));
    const std::size_t cin = x.cols();
    if (w.rows() != kTaps * cin)
        throw std::invalid_argument("conv3d: weight rows " + std::to_string(w.rows()) + " do not match 64*" +
                                    std::to_string(cin));
    const Grid out = downsample(in);
    Var patches = ad::gather(x, conv_patch_index(in, cin), {out.rows(), kTaps * cin});
    return ad::add(ad::matmul(patches, w), b);
}

// Transposed counterpart: x: [in.rows(), Cin], w: [Cin, 64*Cout], b: [1, Cout]
// -> [out.rows(), Cout]. `out` must halve to `in`.
inline Var conv3d_transpose(Var x, const Grid& in, const Grid& out, Var w, Var b) {
    if (downsample(out) != in) throw std::invalid_argument("conv3d_transpose: output grid does not halve to input grid");
    if (x.rows() != in.rows() || w.rows() != x.cols() || w.cols() % kTaps != 0)
        throw std::invalid_argument("conv3d_transpose: shape mismatch between input and weight");
    const std::size_t cout = w.cols() / kTaps;
    Var taps = ad::matmul(x, w);
    Var spread = ad::scatter_add(taps, deconv_scatter_index(in, out, cout), {out.rows(), cout});
    return ad::add(spread, b);
}

// Uniform(+-1/sqrt(fan_in)) weights, zero bias. A transposed-conv output
// collects 2 taps per axis, so its fan-in is 8*Cin.
inline void add_conv_params(ad::ParameterSet& set, const std::string& name, std::size_t cin, std::size_t cout,
                            bool transposed, Rng& rng) {
    const std::size_t fan_in = transposed ? 8 * cin : kTaps * cin;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Tensor w = transposed ? Tensor::zeros({cin, kTaps * cout}) : Tensor::zeros({kTaps * cin, cout});
    for (double& v : w.values()) v = rng.uniform(-bound, bound);
    set.add(name + ".w", std::move(w));
    set.add(name + ".b", Tensor::zeros({1, cout}));
}

}  // namespace posef::gan

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "posef/core/parallel.hpp"
#include "posef/core/rng.hpp"

namespace posef::eval {

using Vector = std::vector<double>;
using FeatureSet = std::vector<Vector>;

inline double euclidean(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("euclidean: dimensions " + std::to_string(a.size()) + " and " +
                                    std::to_string(b.size()) + " differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

// ---- min-over-N error ----------------------------------------------------

struct ErrorCurve {
    std::vector<std::size_t> n;
    std::vector<double> mean_min_error;

    void write_csv(std::ostream& os) const {
        os << "n,mean_min_error\n";
        char buf[64];
        for (std::size_t i = 0; i < n.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", mean_min_error[i]);
            os << n[i] << ',' << buf << '\n';
        }
    }

    void save_csv(const std::filesystem::path& path) const {
        std::ofstream os(path);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        write_csv(os);
    }
};

// samples[e][s] is sample s of example e; the curve at n averages, over
// examples, the smallest distance to truths[e] among the first n samples.
inline ErrorCurve min_error_curve(const std::vector<FeatureSet>& samples, const FeatureSet& truths,
                                  std::vector<std::size_t> grid) {
    if (samples.size() != truths.size())
        throw std::invalid_argument("min_error_curve: " + std::to_string(samples.size()) + " sample sets for " +
                                    std::to_string(truths.size()) + " ground truths");
    if (samples.empty()) throw std::invalid_argument("min_error_curve: no examples");
    if (grid.empty()) throw std::invalid_argument("min_error_curve: empty n grid");
    std::sort(grid.begin(), grid.end());
    if (grid.front() == 0) throw std::invalid_argument("min_error_curve: n must be positive");
    const std::size_t nmax = grid.back();
    ErrorCurve c;
    c.n = grid;
    c.mean_min_error.assign(grid.size(), 0.0);
    for (std::size_t e = 0; e < samples.size(); ++e) {
        if (samples[e].size() < nmax)
            throw std::invalid_argument("min_error_curve: example " + std::to_string(e) + " has " +
                                        std::to_string(samples[e].size()) + " samples, need " + std::to_string(nmax));
        double best = std::numeric_limits<double>::infinity();
        std::size_t g = 0;
        for (std::size_t s = 0; s < nmax; ++s) {
            best = std::min(best, euclidean(samples[e][s], truths[e]));
            while (g < grid.size() && grid[g] == s + 1) c.mean_min_error[g++] += best;
        }
    }
    for (double& v : c.mean_min_error) v /= static_cast<double>(samples.size());
    return c;
}

// Unbiased per-dimension variance of a set of vectors.
inline Vector per_dimension_variance(const FeatureSet& data) {
    if (data.size() < 2) throw std::invalid_argument("per_dimension_variance: need at least 2 vectors");
    const std::size_t d = data.front().size();
    Vector mean(d, 0.0), var(d, 0.0);
    for (const auto& x : data)
        for (std::size_t i = 0; i < d; ++i) mean[i] += x[i];
    for (double& m : mean) m /= static_cast<double>(data.size());
    for (const auto& x : data)
        for (std::size_t i = 0; i < d; ++i) var[i] += (x[i] - mean[i]) * (x[i] - mean[i]);
    for (double& v : var) v /= static_cast<double>(data.size() - 1);
    return var;
}

// n draws per example from N(output, diag(variance)); example e uses stream
// ("gaussianize", e).
inline std::vector<FeatureSet> gaussianize_baseline(const FeatureSet& outputs, const Vector& variance, std::size_t n,
                                                    std::uint64_t seed) {
    for (double v : variance)
        if (!(v >= 0)) throw std::invalid_argument("gaussianize_baseline: variance must be >= 0");
    std::vector<FeatureSet> out(outputs.size());
    for (std::size_t e = 0; e < outputs.size(); ++e) {
        if (outputs[e].size() != variance.size())
            throw std::invalid_argument("gaussianize_baseline: output and variance dimensions differ");
        Rng rng(seed, "gaussianize", e);
        out[e].reserve(n);
        for (std::size_t s = 0; s < n; ++s) {
            Vector x = outputs[e];
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double z = rng.normal();
                if (variance[i] > 0) x[i] += std::sqrt(variance[i]) * z;
            }
            out[e].push_back(std::move(x));
        }
    }
    return out;
}

// ---- Inception-style score ----------------------------------------------

inline void check_simplex(const Vector& p, std::size_t k, std::size_t row) {
    if (p.size() != k)
        throw std::invalid_argument("inception_score: conditional " + std::to_string(row) + " has " +
                                    std::to_string(p.size()) + " classes, expected " + std::to_string(k));
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw std::invalid_argument("inception_score: negative probability in row " + std::to_string(row));
        s += v;
    }
    if (std::fabs(s - 1.0) > 1e-9)
        throw std::invalid_argument("inception_score: row " + std::to_string(row) + " sums to " + std::to_string(s));
}

// exp(mean_x KL(p(y|x) || p(y))), natural log, 0 ln 0 = 0.
inline double inception_score(const FeatureSet& conditionals) {
    if (conditionals.empty()) throw std::invalid_argument("inception_score: no conditionals");
    const std::size_t k = conditionals.front().size();
    Vector marginal(k, 0.0);
    for (std::size_t r = 0; r < conditionals.size(); ++r) {
        check_simplex(conditionals[r], k, r);
        for (std::size_t j = 0; j < k; ++j) marginal[j] += conditionals[r][j];
    }
    for (double& m : marginal) m /= static_cast<double>(conditionals.size());
    double kl = 0.0;
    for (const auto& p : conditionals)
        for (std::size_t j = 0; j < k; ++j)
            if (p[j] > 0) kl += p[j] * (std::log(p[j]) - std::log(marginal[j]));
    return std::exp(kl / static_cast<double>(conditionals.size()));
}

// ---- MMD ----------------------------------------------------------------

// Powers of ten, 1e-4 .. 1e9.
inline std::vector<double> default_bandwidths() {
    std::vector<double> g;
    for (int e = -4; e <= 9; ++e) g.push_back(std::pow(10.0, e));
    return g;
}

namespace detail {

using ColMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

// One column per point.
inline ColMat to_columns(const FeatureSet& s, std::size_t dim) {
    ColMat m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(s.size()));
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (s[j].size() != dim) throw std::invalid_argument("mmd: feature dimensions differ");
        for (std::size_t i = 0; i < dim; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[j][i];
    }
    return m;
}

inline constexpr std::size_t kRowBlock = 64;

// sums[b] = sum of k(a_i, b_j) over pairs (j > i when `upper`, all j
// otherwise), one entry per bandwidth. Rows are split into fixed blocks whose
// partial sums are combined in block order, so the result does not depend on
// the worker count.
inline std::vector<double> kernel_sums(const ColMat& a, const ColMat& b, bool upper, const std::vector<double>& bw) {
    const std::size_t rows = static_cast<std::size_t>(a.cols());
    const std::size_t blocks = (rows + kRowBlock - 1) / kRowBlock;
    std::vector<std::vector<double>> partial(blocks, std::vector<double>(bw.size(), 0.0));
    std::vector<double> coef(bw.size());
    for (std::size_t k = 0; k < bw.size(); ++k) coef[k] = -1.0 / (2.0 * bw[k]);
    parallel_for(blocks, [&](std::size_t blk) {
        Eigen::ArrayXd d2, e;
        for (std::size_t i = blk * kRowBlock; i < std::min(rows, (blk + 1) * kRowBlock); ++i) {
            const Eigen::Index from = upper ? static_cast<Eigen::Index>(i + 1) : 0;
            const Eigen::Index count = b.cols() - from;
            if (count <= 0) continue;
            d2 = (b.middleCols(from, count).colwise() - a.col(static_cast<Eigen::Index>(i))).colwise().squaredNorm().transpose().array();
            for (std::size_t k = 0; k < bw.size(); ++k) {
                e = (d2 * coef[k]).exp();
                partial[blk][k] += e.sum();
            }
        }
    });
    std::vector<double> total(bw.size(), 0.0);
    for (const auto& p : partial)
        for (std::size_t k = 0; k < bw.size(); ++k) total[k] += p[k];
    return total;
}

}  // namespace detail

// Unbiased MMD^2 for each bandwidth (sigma^2) of `bandwidths`, with kernel
// exp(-|x - y|^2 / (2 sigma^2)). Values may be negative.
inline std::vector<double> mmd_unbiased_all(const FeatureSet& x, const FeatureSet& y,
                                            const std::vector<double>& bandwidths) {
    if (x.size() < 2 || y.size() < 2)
        throw std::invalid_argument("mmd_unbiased: need at least 2 points per set, got " + std::to_string(x.size()) +
                                    " and " + std::to_string(y.size()));
    if (bandwidths.empty()) throw std::invalid_argument("mmd: empty bandwidth grid");
    for (double b : bandwidths)
        if (!(b > 0)) throw std::invalid_argument("mmd: bandwidth must be > 0");
    const std::size_t dim = x.front().size();
    const auto X = detail::to_columns(x, dim), Y = detail::to_columns(y, dim);
    const auto kxx = detail::kernel_sums(X, X, true, bandwidths);
    const auto kyy = detail::kernel_sums(Y, Y, true, bandwidths);
    const auto kxy = detail::kernel_sums(X, Y, false, bandwidths);
    const double m = static_cast<double>(x.size()), n = static_cast<double>(y.size());
    std::vector<double> out(bandwidths.size());
    for (std::size_t k = 0; k < bandwidths.size(); ++k)
        out[k] = 2.0 * kxx[k] / (m * (m - 1)) + 2.0 * kyy[k] / (n * (n - 1)) - 2.0 * kxy[k] / (m * n);
    return out;
}

inline double mmd_unbiased(const FeatureSet& x, const FeatureSet& y, double bandwidth) {
    return mmd_unbiased_all(x, y, {bandwidth})[0];
}

// Maximum over the grid.
inline double mmd_max(const FeatureSet& x, const FeatureSet& y, const std::vector<double>& bandwidths) {
    const auto v = mmd_unbiased_all(x, y, bandwidths);
    return *std::max_element(v.begin(), v.end());
}

// ---- bootstrap ----------------------------------------------------------

inline constexpr std::size_t kDefaultBootstrap = 1000;

inline std::vector<std::size_t> resample_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = rng.index(n);
    return idx;
}

inline double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

// Unbiased variance of `stat` over B resamples with replacement; resample b
// uses stream ("bootstrap", b).
template <class T, class Stat>
double bootstrap_variance(const std::vector<T>& data, Stat&& stat, std::size_t resamples, std::uint64_t seed) {
    if (data.empty()) throw std::invalid_argument("bootstrap_variance: empty data");
    if (resamples < 2) throw std::invalid_argument("bootstrap_variance: need at least 2 resamples");
    std::vector<double> values(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        Rng rng(seed, "bootstrap", b);
        std::vector<T> draw;
        draw.reserve(data.size());
        for (std::size_t i : resample_indices(data.size(), rng)) draw.push_back(data[i]);
        values[b] = stat(draw);
    }
    return sample_variance(values);
}

// Two-sample version: both sets resampled independently from one stream.
template <class T, class Stat>
double bootstrap_variance(const std::vector<T>& x, const std::vector<T>& y, Stat&& stat, std::size_t resamples,
                          std::uint64_t seed) {
    if (x.empty() || y.empty()) throw std::invalid_argument("bootstrap_variance: empty data");
    if (resamples < 2) throw std::invalid_argument("bootstrap_variance: need at least 2 resamples");
    std::vector<double> values(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        Rng rng(seed, "bootstrap2", b);
        std::vector<T> dx, dy;
        for (std::size_t i : resample_indices(x.size(), rng)) dx.push_back(x[i]);
        for (std::size_t i : resample_indices(y.size(), rng)) dy.push_back(y[i]);
        values[b] = stat(dx, dy);
    }
    return sample_variance(values);
}

// ---- reports ------------------------------------------------------------

struct MetricReport {
    std::string metric;
    double value = 0.0;
    double variance = 0.0;
    std::vector<std::size_t> sample_sizes;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();

    nlohmann::json to_json() const {
        return {{"metric", metric}, {"value", value},   {"variance", variance},
                {"sample_sizes", sample_sizes}, {"seed", seed}, {"config", config}};
    }
};

inline MetricReport inception_report(const FeatureSet& conditionals, std::size_t resamples, std::uint64_t seed) {
    MetricReport r;
    r.metric = "inception_score";
    r.value = inception_score(conditionals);
    r.variance = bootstrap_variance(conditionals, [](const FeatureSet& d) { return inception_score(d); }, resamples,
                                    seed);
    r.sample_sizes = {conditionals.size()};
    r.seed = seed;
    r.config = {{"log", "natural"}, {"bootstrap_resamples", resamples}};
    return r;
}

// Max over the bandwidth grid of MMD^2_u, with the maximizing bandwidth and
// the full sweep echoed.
inline MetricReport mmd_sweep(const FeatureSet& x, const FeatureSet& y,
                              const std::vector<double>& bandwidths = default_bandwidths(),
                              std::size_t resamples = kDefaultBootstrap, std::uint64_t seed = 0) {
    if (bandwidths.empty()) throw std::invalid_argument("mmd_sweep: empty bandwidth grid");
    const auto all = mmd_unbiased_all(x, y, bandwidths);
    const auto best = static_cast<std::size_t>(std::max_element(all.begin(), all.end()) - all.begin());
    MetricReport r;
    r.metric = "mmd2_unbiased";
    r.value = all[best];
    r.variance = resamples >= 2 ? bootstrap_variance(
                                      x, y, [&](const FeatureSet& a, const FeatureSet& b) { return mmd_max(a, b, bandwidths); },
                                      resamples, seed)
                                : 0.0;
    r.sample_sizes = {x.size(), y.size()};
    r.seed = seed;
    r.config = {{"kernel", "exp(-|x-y|^2/(2*sigma2))"},
                {"bandwidths_sigma2", bandwidths},
                {"per_bandwidth", all},
                {"argmax_sigma2", bandwidths[best]},
                {"bootstrap_resamples", resamples}};
    return r;
}

}  // namespace posef::eval

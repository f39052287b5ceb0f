#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "posef/core/rng.hpp"
#include "posef/vae/pose_vae.hpp"

namespace posef::vae {

struct Cluster {
    std::vector<double> centroid;
    std::vector<std::size_t> members;

    std::size_t size() const { return members.size(); }
};

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// Lloyd iterations from k-means++ seeds. Ties go to the lowest cluster
// index; an empty cluster keeps its previous centroid. Output is sorted by
// size, largest first (stable on ties).
inline std::vector<Cluster> kmeans(const std::vector<std::vector<double>>& points, int k, std::uint64_t seed,
                                   std::size_t max_iterations = 100) {
    if (k <= 0) throw std::invalid_argument("kmeans: k must be positive, got " + std::to_string(k));
    const auto kk = static_cast<std::size_t>(k);
    if (kk > points.size())
        throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(points.size()) +
                                    " points");
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw std::invalid_argument("kmeans: points differ in dimension");

    Rng rng(seed, "kmeans");
    std::vector<std::vector<double>> centers;
    centers.push_back(points[rng.index(points.size())]);
    std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
    while (centers.size() < kk) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
            total += d2[i];
        }
        std::size_t pick = 0;
        if (total > 0) {
            double u = rng.uniform() * total;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                u -= d2[i];
                if (u < 0 && d2[i] > 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            rng.uniform();  // keep the stream length independent of the data
        }
        centers.push_back(points[pick]);
    }

    std::vector<std::size_t> assign(points.size(), kk);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(points[i], centers[0]);
            for (std::size_t c = 1; c < kk; ++c) {
                const double d = squared_distance(points[i], centers[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        std::vector<std::vector<double>> sums(kk, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(kk, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            ++counts[assign[i]];
            for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i][d];
        }
        for (std::size_t c = 0; c < kk; ++c)
            if (counts[c] > 0)
                for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }

    std::vector<Cluster> clusters(kk);
    for (std::size_t c = 0; c < kk; ++c) clusters[c].centroid = centers[c];
    for (std::size_t i = 0; i < points.size(); ++i) clusters[assign[i]].members.push_back(i);
    std::stable_sort(clusters.begin(), clusters.end(),
                     [](const Cluster& a, const Cluster& b) { return a.size() > b.size(); });
    return clusters;
}

inline std::vector<double> flatten(const pose::VelocitySequence& v) {
    std::vector<double> out;
    out.reserve(v.size() * kPoseDim);
    for (const auto& y : v.velocities) out.insert(out.end(), y.coords.begin(), y.coords.end());
    return out;
}

// Modes of a sample set, clustered on flattened velocity sequences.
inline std::vector<Cluster> cluster_modes(const std::vector<FutureSample>& samples, int k, std::uint64_t seed = 0) {
    if (k <= 0) throw std::invalid_argument("cluster_modes: k must be positive, got " + std::to_string(k));
    std::vector<std::vector<double>> pts;
    pts.reserve(samples.size());
    for (const auto& s : samples) pts.push_back(flatten(s.velocities));
    return kmeans(pts, k, seed);
}

}  // namespace posef::vae

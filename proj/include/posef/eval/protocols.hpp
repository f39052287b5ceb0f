#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "posef/eval/classifier.hpp"
#include "posef/eval/metrics.hpp"
#include "posef/gan/video.hpp"
#include "posef/pose/pose.hpp"
#include "posef/vae/kmeans.hpp"
#include "posef/vae/pose_vae.hpp"

namespace posef::eval {

inline const std::vector<std::size_t>& default_n_grid() {
    static const std::vector<std::size_t> g{1, 2, 4, 8, 16, 32, 64, 100};
    return g;
}

// Ground-truth future velocities v_t .. v_{t+F-1}, flattened.
inline FeatureSet future_truths(const std::vector<pose::PoseSequence>& test, std::size_t past_steps,
                                std::size_t future_steps) {
    FeatureSet out;
    for (const auto& s : test) {
        if (s.size() < past_steps + future_steps + 1)
            throw std::invalid_argument("future_truths: sequence has " + std::to_string(s.size()) + " poses, need " +
                                        std::to_string(past_steps + future_steps + 1));
        Vector v;
        for (std::size_t i = past_steps; i < past_steps + future_steps; ++i) {
            const auto d = s.poses[i + 1] - s.poses[i];
            v.insert(v.end(), d.coords.begin(), d.coords.end());
        }
        out.push_back(std::move(v));
    }
    return out;
}

// n flattened velocity samples per test clip.
inline std::vector<FeatureSet> model_samples(const vae::PoseVae& m, const std::vector<pose::PoseSequence>& test,
                                             std::size_t n, std::uint64_t seed) {
    std::vector<vae::PastClip> clips;
    for (const auto& s : test) clips.push_back(vae::past_clip(s, m.config().past_steps));
    const auto samples = vae::sample_futures(m, clips, n, seed);
    std::vector<FeatureSet> out(samples.size());
    for (std::size_t e = 0; e < samples.size(); ++e)
        for (const auto& fs : samples[e]) out[e].push_back(vae::flatten(fs.velocities));
    return out;
}

// Min-over-N curve of a model. A deterministic model can be Gaussianized:
// its single output becomes the mean of N(output, diag(test variance)).
inline ErrorCurve evaluate_pose_model(const vae::PoseVae& m, const std::vector<pose::PoseSequence>& test,
                                      const std::vector<std::size_t>& grid, std::uint64_t seed,
                                      bool gaussianize = false) {
    if (grid.empty()) throw std::invalid_argument("evaluate_pose_model: empty n grid");
    const auto& cfg = m.config();
    const FeatureSet truths = future_truths(test, cfg.past_steps, cfg.future_steps);
    const std::size_t nmax = *std::max_element(grid.begin(), grid.end());
    if (!gaussianize) return min_error_curve(model_samples(m, test, nmax, seed), truths, grid);
    if (!cfg.deterministic) throw std::invalid_argument("evaluate_pose_model: only deterministic models are Gaussianized");
    FeatureSet outputs;
    for (auto& s : model_samples(m, test, 1, seed)) outputs.push_back(std::move(s.front()));
    return min_error_curve(gaussianize_baseline(outputs, per_dimension_variance(truths), nmax, seed), truths, grid);
}

// ---- videos -------------------------------------------------------------

inline Vector flatten_video(const gan::Video& v) { return v.values; }

inline FeatureSet flatten_videos(const std::vector<gan::Video>& vs) {
    FeatureSet out;
    out.reserve(vs.size());
    for (const auto& v : vs) out.push_back(flatten_video(v));
    return out;
}

struct VideoEvalConfig {
    ClassifierConfig classifier;
    std::size_t resamples = kDefaultBootstrap;
    std::vector<double> bandwidths = default_bandwidths();
    std::uint64_t seed = 0;

    nlohmann::json to_json() const {
        return {{"classifier", classifier.to_json()},
                {"bootstrap_resamples", resamples},
                {"bandwidths_sigma2", bandwidths},
                {"seed", seed}};
    }
};

struct VideoEvalResult {
    MetricReport inception;
    MetricReport mmd;
    double classifier_train_accuracy = 0.0;

    nlohmann::json to_json() const {
        return {{"inception", inception.to_json()},
                {"mmd", mmd.to_json()},
                {"classifier_train_accuracy", classifier_train_accuracy}};
    }
};

// Classifier trained on labelled real videos; Inception score over the
// generated set, MMD between penultimate features of real and generated.
inline VideoEvalResult evaluate_videos(const std::vector<gan::Video>& generated, const std::vector<gan::Video>& real,
                                       const std::vector<int>& labels, std::size_t classes,
                                       const VideoEvalConfig& cfg) {
    if (generated.size() < 2 || real.size() < 2)
        throw std::invalid_argument("evaluate_videos: need at least 2 generated and 2 real videos");
    for (const auto& v : generated)
        if (v.shape != real.front().shape)
            throw std::invalid_argument("evaluate_videos: generated " + v.shape.str() + " vs real " +
                                        real.front().shape.str());
    const FeatureSet rx = flatten_videos(real), gx = flatten_videos(generated);
    const Classifier clf = train_classifier(rx, labels, classes, cfg.classifier);
    VideoEvalResult r;
    r.classifier_train_accuracy = accuracy(clf, rx, labels);
    r.inception = inception_report(clf.predict(gx), cfg.resamples, cfg.seed);
    r.mmd = mmd_sweep(clf.embed(rx), clf.embed(gx), cfg.bandwidths, cfg.resamples, cfg.seed);
    r.inception.config["classifier"] = cfg.classifier.to_json();
    r.mmd.config["classifier"] = cfg.classifier.to_json();
    r.mmd.config["features"] = "classifier penultimate layer";
    return r;
}

}  // namespace posef::eval

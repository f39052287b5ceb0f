#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace posef::pose {

inline constexpr std::size_t kKeypoints = 18;
inline constexpr std::size_t kPoseDim = 2 * kKeypoints;

// OpenPose/COCO 18-keypoint ordering.
enum Keypoint : std::size_t {
    kNose,
    kNeck,
    kRShoulder,
    kRElbow,
    kRWrist,
    kLShoulder,
    kLElbow,
    kLWrist,
    kRHip,
    kRKnee,
    kRAnkle,
    kLHip,
    kLKnee,
    kLAnkle,
    kREye,
    kLEye,
    kREar,
    kLEar,
};

// Stick-figure topology shared by the generator and the rasterizer.
inline constexpr std::array<std::pair<std::size_t, std::size_t>, 17> kSkeletonEdges{{
    {kNose, kNeck},
    {kNeck, kRShoulder},
    {kNeck, kLShoulder},
    {kRShoulder, kRElbow},
    {kRElbow, kRWrist},
    {kLShoulder, kLElbow},
    {kLElbow, kLWrist},
    {kNeck, kRHip},
    {kNeck, kLHip},
    {kRHip, kRKnee},
    {kRKnee, kRAnkle},
    {kLHip, kLKnee},
    {kLKnee, kLAnkle},
    {kNose, kREye},
    {kNose, kLEye},
    {kREye, kREar},
    {kLEye, kLEar},
}};

// 36-d vector, interleaved (x0, y0, x1, y1, ...). Tag separates positions
// from frame-to-frame deltas.
template <class Tag>
struct Vec36 {
    std::array<double, kPoseDim> coords{};

    double& operator[](std::size_t i) { return coords[i]; }
    double operator[](std::size_t i) const { return coords[i]; }
    double x(std::size_t k) const { return coords[2 * k]; }
    double y(std::size_t k) const { return coords[2 * k + 1]; }
    double& x(std::size_t k) { return coords[2 * k]; }
    double& y(std::size_t k) { return coords[2 * k + 1]; }

    static Vec36 filled(double v) {
        Vec36 p;
        p.coords.fill(v);
        return p;
    }

    bool finite() const {
        return std::all_of(coords.begin(), coords.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Vec36&, const Vec36&) = default;
};

struct PoseTag {};
struct VelocityTag {};
using Pose = Vec36<PoseTag>;
using Velocity = Vec36<VelocityTag>;

inline Velocity operator-(const Pose& a, const Pose& b) {
    Velocity v;
    for (std::size_t i = 0; i < kPoseDim; ++i) v[i] = a[i] - b[i];
    return v;
}

inline Pose operator+(const Pose& p, const Velocity& v) {
    Pose out;
    for (std::size_t i = 0; i < kPoseDim; ++i) out[i] = p[i] + v[i];
    return out;
}

using ContextFeature = std::vector<double>;

// Poses at a fixed 0.2 s timestep plus the clip's context vector.
struct PoseSequence {
    std::vector<Pose> poses;
    ContextFeature context;

    std::size_t size() const { return poses.size(); }
    friend bool operator==(const PoseSequence&, const PoseSequence&) = default;
};

struct VelocitySequence {
    std::vector<Velocity> velocities;

    std::size_t size() const { return velocities.size(); }
    friend bool operator==(const VelocitySequence&, const VelocitySequence&) = default;
};

inline VelocitySequence velocities_from_poses(const PoseSequence& seq) {
    if (seq.size() < 2)
        throw std::invalid_argument("velocities_from_poses: need at least 2 poses, got " + std::to_string(seq.size()));
    VelocitySequence out;
    out.velocities.reserve(seq.size() - 1);
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) out.velocities.push_back(seq.poses[i + 1] - seq.poses[i]);
    return out;
}

inline PoseSequence compose_poses(const Pose& start, const VelocitySequence& vels, ContextFeature context = {}) {
    PoseSequence out;
    out.context = std::move(context);
    out.poses.reserve(vels.size() + 1);
    out.poses.push_back(start);
    for (const Velocity& v : vels.velocities) out.poses.push_back(out.poses.back() + v);
    return out;
}

// Centered moving average; boundary frames average over the truncated window.
inline PoseSequence smooth_sequence(const PoseSequence& seq, int window = 3) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("smooth_sequence: window must be odd and positive, got " + std::to_string(window));
    const auto n = static_cast<std::ptrdiff_t>(seq.size());
    const std::ptrdiff_t half = window / 2;
    PoseSequence out;
    out.context = seq.context;
    out.poses.resize(seq.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
        const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, i + half);
        const double count = static_cast<double>(hi - lo + 1);
        for (std::size_t d = 0; d < kPoseDim; ++d) {
            double s = 0.0;
            for (std::ptrdiff_t j = lo; j <= hi; ++j) s += seq.poses[static_cast<std::size_t>(j)][d];
            out.poses[static_cast<std::size_t>(i)][d] = s / count;
        }
    }
    return out;
}

// x' = (x - cx) * scale, y' = (y - cy) * scale.
struct SimilarityTransform {
    double cx = 0.0;
    double cy = 0.0;
    double scale = 1.0;

    Pose apply(const Pose& p) const {
        Pose out;
        for (std::size_t k = 0; k < kKeypoints; ++k) {
            out.x(k) = (p.x(k) - cx) * scale;
            out.y(k) = (p.y(k) - cy) * scale;
        }
        return out;
    }

    Pose invert(const Pose& p) const {
        Pose out;
        for (std::size_t k = 0; k < kKeypoints; ++k) {
            out.x(k) = p.x(k) / scale + cx;
            out.y(k) = p.y(k) / scale + cy;
        }
        return out;
    }

    PoseSequence invert(const PoseSequence& seq) const {
        PoseSequence out{{}, seq.context};
        for (const Pose& p : seq.poses) out.poses.push_back(invert(p));
        return out;
    }
};

// Centers the first pose's centroid at the origin and scales its larger
// bounding-box side to 1; the same transform is applied to every frame.
inline std::pair<PoseSequence, SimilarityTransform> normalize_pose_sequence(const PoseSequence& seq) {
    if (seq.poses.empty()) throw std::invalid_argument("normalize_pose_sequence: empty sequence");
    const Pose& first = seq.poses.front();
    double cx = 0.0, cy = 0.0;
    double xmin = first.x(0), xmax = xmin, ymin = first.y(0), ymax = ymin;
    for (std::size_t k = 0; k < kKeypoints; ++k) {
        cx += first.x(k);
        cy += first.y(k);
        xmin = std::min(xmin, first.x(k));
        xmax = std::max(xmax, first.x(k));
        ymin = std::min(ymin, first.y(k));
        ymax = std::max(ymax, first.y(k));
    }
    const double side = std::max(xmax - xmin, ymax - ymin);
    if (!(side > 0)) throw std::invalid_argument("normalize_pose_sequence: degenerate first pose (zero extent)");
    SimilarityTransform tf{cx / kKeypoints, cy / kKeypoints, 1.0 / side};
    PoseSequence out{{}, seq.context};
    out.poses.reserve(seq.size());
    for (const Pose& p : seq.poses) out.poses.push_back(tf.apply(p));
    return {std::move(out), tf};
}

struct LabeledSequence {
    PoseSequence sequence;
    std::optional<int> label;
    std::optional<int> branch;  // synthetic heading branch, when known

    friend bool operator==(const LabeledSequence&, const LabeledSequence&) = default;
};

struct DatasetManifest {
    std::vector<LabeledSequence> sequences;
    std::string split = "train";
    std::uint64_t seed = 0;
    int num_classes = 0;

    std::size_t size() const { return sequences.size(); }
    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

}  // namespace posef::pose

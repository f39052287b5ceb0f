#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <utility>

#include "posef/core/rng.hpp"
#include "posef/gan/video.hpp"
#include "posef/pose/pose.hpp"

namespace posef::gan {

// Normalized [-1, 1] to continuous pixel coordinates (pixel centers at integers).
inline std::pair<double, double> to_pixel(double x, double y, std::size_t width, std::size_t height) {
    return {(x + 1.0) * 0.5 * static_cast<double>(width - 1), (y + 1.0) * 0.5 * static_cast<double>(height - 1)};
}

// Liang-Barsky against [xmin, xmax] x [ymin, ymax]; false when nothing remains.
inline bool clip_segment(double& x0, double& y0, double& x1, double& y1, double xmin, double xmax, double ymin,
                         double ymax) {
    const double dx = x1 - x0, dy = y1 - y0;
    double t0 = 0.0, t1 = 1.0;
    const std::array<std::pair<double, double>, 4> pq{{{-dx, x0 - xmin}, {dx, xmax - x0}, {-dy, y0 - ymin}, {dy, ymax - y0}}};
    for (const auto& [p, q] : pq) {
        if (p == 0.0) {
            if (q < 0.0) return false;
            continue;
        }
        const double r = q / p;
        if (p < 0.0) {
            if (r > t1) return false;
            if (r > t0) t0 = r;
        } else {
            if (r < t0) return false;
            if (r < t1) t1 = r;
        }
    }
    const double nx0 = x0 + t0 * dx, ny0 = y0 + t0 * dy;
    x1 = x0 + t1 * dx;
    y1 = y0 + t1 * dy;
    x0 = nx0;
    y0 = ny0;
    return true;
}

// Integer Bresenham between rounded endpoints; plot(x, y) only receives
// in-frame pixels.
template <class Plot>
void draw_segment(double x0, double y0, double x1, double y1, std::size_t width, std::size_t height, Plot&& plot) {
    const double lo = -0.5;
    if (!clip_segment(x0, y0, x1, y1, lo, static_cast<double>(width) - 0.5, lo, static_cast<double>(height) - 0.5))
        return;
    long ax = std::lround(x0), ay = std::lround(y0);
    const long bx = std::lround(x1), by = std::lround(y1);
    const long dx = std::labs(bx - ax), dy = -std::labs(by - ay);
    const long sx = ax < bx ? 1 : -1, sy = ay < by ? 1 : -1;
    long err = dx + dy;
    const auto w = static_cast<long>(width), h = static_cast<long>(height);
    while (true) {
        if (ax >= 0 && ax < w && ay >= 0 && ay < h) plot(static_cast<std::size_t>(ax), static_cast<std::size_t>(ay));
        if (ax == bx && ay == by) break;
        const long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            ax += sx;
        }
        if (e2 <= dx) {
            err += dx;
            ay += sy;
        }
    }
}

// Pose index shown in frame f when P poses are spread over F frames.
inline std::size_t nearest_pose(std::size_t f, std::size_t frames, std::size_t poses) {
    const std::size_t p = (2 * f + 1) * poses / (2 * frames);
    return std::min(p, poses - 1);
}

// White (+1) stick figures on black (-1).
inline Video render_skeleton(const pose::PoseSequence& seq, std::size_t height, std::size_t width,
                             std::size_t frames) {
    if (height < 8 || width < 8) throw std::invalid_argument("render_skeleton: resolution must be at least 8x8");
    if (frames == 0) throw std::invalid_argument("render_skeleton: frames must be positive");
    if (seq.poses.empty()) throw std::invalid_argument("render_skeleton: empty pose sequence");
    Video v(VideoShape{frames, height, width, 3}, -1.0);
    for (std::size_t f = 0; f < frames; ++f) {
        const pose::Pose& p = seq.poses[nearest_pose(f, frames, seq.size())];
        for (const auto& [a, b] : pose::kSkeletonEdges) {
            auto [x0, y0] = to_pixel(p.x(a), p.y(a), width, height);
            auto [x1, y1] = to_pixel(p.x(b), p.y(b), width, height);
            draw_segment(x0, y0, x1, y1, width, height, [&](std::size_t x, std::size_t y) {
                for (std::size_t c = 0; c < 3; ++c) v.at(f, y, x, c) = 1.0;
            });
        }
    }
    return v;
}

// Colors for the synthetic "real" videos: a background tint plus one color
// per limb group (head, torso, arms, legs).
struct Appearance {
    std::array<double, 3> background{};
    std::array<std::array<double, 3>, 4> limbs{};

    static Appearance random(std::uint64_t seed, std::uint64_t index) {
        Rng rng(seed, "appearance", index);
        Appearance a;
        for (double& c : a.background) c = rng.uniform(-0.9, -0.3);
        for (auto& limb : a.limbs)
            for (double& c : limb) c = rng.uniform(0.2, 0.95);
        return a;
    }
};

inline int limb_group(std::size_t edge) {
    if (edge == 0 || edge >= 13) return 0;  // head
    if (edge == 7 || edge == 8 || edge == 1 || edge == 2) return 1;
    if (edge <= 6) return 2;
    return 3;
}

// Appearance video: tinted background with a vertical gradient, limbs drawn
// in their group color.
inline Video render_appearance(const pose::PoseSequence& seq, const Appearance& look, VideoShape shape) {
    if (shape.channels != 3) throw std::invalid_argument("render_appearance: three channels expected");
    Video v(shape);
    for (std::size_t f = 0; f < shape.frames; ++f) {
        for (std::size_t y = 0; y < shape.height; ++y)
            for (std::size_t x = 0; x < shape.width; ++x)
                for (std::size_t c = 0; c < 3; ++c)
                    v.at(f, y, x, c) = look.background[c] + 0.1 * static_cast<double>(y) / static_cast<double>(shape.height);
        const pose::Pose& p = seq.poses[nearest_pose(f, shape.frames, seq.size())];
        for (std::size_t e = 0; e < pose::kSkeletonEdges.size(); ++e) {
            const auto [a, b] = pose::kSkeletonEdges[e];
            auto [x0, y0] = to_pixel(p.x(a), p.y(a), shape.width, shape.height);
            auto [x1, y1] = to_pixel(p.x(b), p.y(b), shape.width, shape.height);
            const auto& col = look.limbs[static_cast<std::size_t>(limb_group(e))];
            draw_segment(x0, y0, x1, y1, shape.width, shape.height, [&](std::size_t x, std::size_t y) {
                for (std::size_t c = 0; c < 3; ++c) v.at(f, y, x, c) = col[c];
            });
        }
    }
    return v;
}

inline Video first_frame(const Video& v) {
    VideoShape s = v.shape;
    s.frames = 1;
    Video out(s);
    std::copy(v.values.begin(), v.values.begin() + static_cast<std::ptrdiff_t>(s.size()), out.values.begin());
    return out;
}

// Per frame: [skeleton RGB, input image RGB].
inline Video stack_condition(const Video& image, const Video& skeleton) {
    if (image.shape.height != skeleton.shape.height || image.shape.width != skeleton.shape.width)
        throw std::invalid_argument("stack_condition: image " + image.shape.str() + " and skeleton " +
                                    skeleton.shape.str() + " differ spatially");
    if (image.shape.channels != 3 || skeleton.shape.channels != 3)
        throw std::invalid_argument("stack_condition: three-channel inputs expected");
    VideoShape s = skeleton.shape;
    s.channels = 6;
    Video out(s);
    for (std::size_t f = 0; f < s.frames; ++f)
        for (std::size_t y = 0; y < s.height; ++y)
            for (std::size_t x = 0; x < s.width; ++x)
                for (std::size_t c = 0; c < 3; ++c) {
                    out.at(f, y, x, c) = skeleton.at(f, y, x, c);
                    out.at(f, y, x, 3 + c) = image.at(0, y, x, c);
                }
    return out;
}

}  // namespace posef::gan

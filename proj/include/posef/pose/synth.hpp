#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "posef/core/rng.hpp"
#include "posef/core/settings.hpp"
#include "posef/pose/pose.hpp"

namespace posef::pose {

enum Branch : int { kLeft = 0, kStraight = 1, kRight = 2 };

struct SynthConfig {
    std::size_t num_sequences = 1000;
    std::size_t past_steps = 2;
    std::size_t future_steps = 5;
    std::vector<double> branch_probs{0.25, 0.5, 0.25};
    int num_classes = 3;
    std::uint64_t seed = 0;
    double branch_angle = 0.7;  // radians
    std::size_t context_dim = 32;
    double context_noise = 0.05;
    std::string split = "train";

    // Poses per sequence: past poses, the anchor pose, then the future.
    std::size_t sequence_length() const { return past_steps + future_steps + 1; }

    void validate() const {
        if (past_steps < 1) throw std::invalid_argument("synth: past_steps must be >= 1");
        if (future_steps < 1) throw std::invalid_argument("synth: future_steps must be >= 1");
        if (num_classes < 1) throw std::invalid_argument("synth: num_classes must be >= 1");
        if (branch_probs.size() != 3)
            throw std::invalid_argument("synth: branch_probs needs 3 values (left, straight, right), got " +
                                        std::to_string(branch_probs.size()));
        double total = 0.0;
        for (double p : branch_probs) {
            if (!(p >= 0.0)) throw std::invalid_argument("synth: branch probabilities must be non-negative");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw std::invalid_argument("synth: branch_probs must sum to 1, got " + std::to_string(total));
        if (context_dim < 3 + static_cast<std::size_t>(num_classes))
            throw std::invalid_argument("synth: context_dim must be >= 3 + num_classes");
        if (!(context_noise >= 0.0)) throw std::invalid_argument("synth: context_noise must be >= 0");
    }

    static const std::set<std::string>& keys() {
        static const std::set<std::string> k{"num_sequences", "past_steps",  "future_steps",  "branch_probs",
                                             "num_classes",   "seed",        "branch_angle", "context_dim",
                                             "context_noise", "split"};
        return k;
    }

    static SynthConfig from_settings(const Settings& s) {
        s.require_known(keys());
        SynthConfig c;
        c.num_sequences = s.get_u64("num_sequences", c.num_sequences);
        c.past_steps = s.get_u64("past_steps", c.past_steps);
        c.future_steps = s.get_u64("future_steps", c.future_steps);
        c.branch_probs = s.get_doubles("branch_probs", c.branch_probs);
        c.num_classes = static_cast<int>(s.get_u64("num_classes", static_cast<std::uint64_t>(c.num_classes)));
        c.seed = s.get_u64("seed", c.seed);
        c.branch_angle = s.get_double("branch_angle", c.branch_angle);
        c.context_dim = s.get_u64("context_dim", c.context_dim);
        c.context_noise = s.get_double("context_noise", c.context_noise);
        c.split = s.get("split", c.split);
        c.validate();
        return c;
    }
};

namespace detail {

struct Gait {
    double scale;       // body height
    double arm_rest;    // arm angle from hanging straight down
    double arm_amp;
    double leg_amp;
    double freq;        // radians per step
    double phase;
};

inline Pose body_pose(double rx, double ry, const Gait& g, double step) {
    const double s = g.scale;
    const double w = g.freq * step + g.phase;
    Pose p;
    auto put = [&](std::size_t k, double x, double y) {
        p.x(k) = rx + x;
        p.y(k) = ry + y;
    };
    // Image convention: y grows downward, root at the pelvis.
    put(kNeck, 0.0, -0.50 * s);
    put(kNose, 0.0, -0.65 * s);
    put(kREye, -0.04 * s, -0.69 * s);
    put(kLEye, 0.04 * s, -0.69 * s);
    put(kREar, -0.08 * s, -0.67 * s);
    put(kLEar, 0.08 * s, -0.67 * s);

    const double shoulder_y = -0.48 * s;
    const double upper = 0.20 * s, fore = 0.18 * s;
    for (int side : {-1, 1}) {
        const double a = g.arm_rest + g.arm_amp * std::sin(w + (side < 0 ? 0.0 : std::numbers::pi));
        const double sx = side * 0.12 * s;
        const double ex = sx + side * upper * std::sin(a), ey = shoulder_y + upper * std::cos(a);
        const double fa = a + 0.3;
        const double wx = ex + side * fore * std::sin(fa), wy = ey + fore * std::cos(fa);
        const std::size_t sh = side < 0 ? kRShoulder : kLShoulder;
        put(sh, sx, shoulder_y);
        put(side < 0 ? kRElbow : kLElbow, ex, ey);
        put(side < 0 ? kRWrist : kLWrist, wx, wy);
    }

    const double thigh = 0.25 * s, shin = 0.25 * s;
    for (int side : {-1, 1}) {
        const double b = g.leg_amp * std::sin(w + (side < 0 ? std::numbers::pi : 0.0));
        const double hx = side * 0.08 * s;
        const double kx = hx + thigh * std::sin(b), ky = thigh * std::cos(b);
        const double sb = 0.5 * b;
        const double ax = kx + shin * std::sin(sb), ay = ky + shin * std::cos(sb);
        put(side < 0 ? kRHip : kLHip, hx, 0.0);
        put(side < 0 ? kRKnee : kLKnee, kx, ky);
        put(side < 0 ? kRAnkle : kLAnkle, ax, ay);
    }
    return p;
}

}  // namespace detail

// One figure. Index i selects its private random stream.
inline LabeledSequence synth_sequence(const SynthConfig& cfg, std::size_t i) {
    Rng rng(cfg.seed, "synth/" + cfg.split, i);

    const double u = rng.uniform();
    int branch = kRight;
    if (u < cfg.branch_probs[0])
        branch = kLeft;
    else if (u < cfg.branch_probs[0] + cfg.branch_probs[1])
        branch = kStraight;
    const int style = static_cast<int>(rng.index(static_cast<std::size_t>(cfg.num_classes)));
    const double k_frac = cfg.num_classes > 1 ? static_cast<double>(style) / (cfg.num_classes - 1) : 0.0;

    detail::Gait g;
    g.scale = rng.uniform(0.35, 0.45);
    g.arm_rest = 0.25 + 2.2 * k_frac;
    g.arm_amp = 0.15 + 0.15 * k_frac;
    g.leg_amp = 0.35 + 0.1 * k_frac;
    g.freq = 0.9 + 0.3 * k_frac;
    g.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    const double heading = rng.uniform(-std::numbers::pi, std::numbers::pi);
    const double speed = rng.uniform(0.06, 0.10);
    const double ax = rng.uniform(-0.2, 0.2);
    const double ay = rng.uniform(-0.2, 0.2);
    const double turn = branch == kLeft ? cfg.branch_angle : branch == kRight ? -cfg.branch_angle : 0.0;
    const double vx0 = speed * std::cos(heading), vy0 = speed * std::sin(heading);
    const double vx1 = speed * std::cos(heading + turn), vy1 = speed * std::sin(heading + turn);

    LabeledSequence out;
    out.label = style;
    out.branch = branch;
    const auto t = static_cast<double>(cfg.past_steps);
    for (std::size_t j = 0; j < cfg.sequence_length(); ++j) {
        const double d = static_cast<double>(j) - t;
        const double rx = ax + (d < 0 ? vx0 : vx1) * d;
        const double ry = ay + (d < 0 ? vy0 : vy1) * d;
        out.sequence.poses.push_back(detail::body_pose(rx, ry, g, static_cast<double>(j)));
    }

    ContextFeature& c = out.sequence.context;
    c.assign(cfg.context_dim, 0.0);
    c[0] = std::cos(heading);
    c[1] = std::sin(heading);
    c[2] = 10.0 * speed;
    c[3 + static_cast<std::size_t>(style)] = 1.0;
    for (double& v : c) v += cfg.context_noise * rng.normal();
    return out;
}

inline DatasetManifest synth_generate(const SynthConfig& cfg) {
    cfg.validate();
    DatasetManifest m;
    m.split = cfg.split;
    m.seed = cfg.seed;
    m.num_classes = cfg.num_classes;
    m.sequences.reserve(cfg.num_sequences);
    for (std::size_t i = 0; i < cfg.num_sequences; ++i) m.sequences.push_back(synth_sequence(cfg, i));
    return m;
}

}  // namespace posef::pose

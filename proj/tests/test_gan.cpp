#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "posef/core/gradcheck.hpp"
#include "posef/gan/conv.hpp"
#include "posef/gan/raster.hpp"
#include "posef/gan/skeleton_gan.hpp"
#include "posef/gan/video.hpp"
#include "posef/pose/synth.hpp"

using namespace posef;
using namespace posef::gan;
using posef::ad::Tape;
using posef::ad::Var;
using posef::pose::Pose;
using posef::pose::PoseSequence;

namespace {

PoseSequence still(const Pose& p, std::size_t n = 1) {
    PoseSequence s;
    s.poses.assign(n, p);
    return s;
}

std::size_t lit_count(const Video& v, std::size_t f) {
    std::size_t n = 0;
    for (std::size_t y = 0; y < v.shape.height; ++y)
        for (std::size_t x = 0; x < v.shape.width; ++x)
            if (v.at(f, y, x, 0) > 0) ++n;
    return n;
}

// Pose whose keypoints sit near integer pixel centers (offsets within 0.3 of a
// cell), inside [lo, W-1-lo] x [lo, H-1-lo].
Pose pixel_pose(std::mt19937_64& gen, std::size_t w, std::size_t h, int lo) {
    std::uniform_int_distribution<int> ix(lo, static_cast<int>(w) - 1 - lo), iy(lo, static_cast<int>(h) - 1 - lo);
    std::uniform_real_distribution<double> off(-0.3, 0.3);
    Pose p;
    for (std::size_t k = 0; k < pose::kKeypoints; ++k) {
        const double px = ix(gen) + off(gen), py = iy(gen) + off(gen);
        p.x(k) = px / static_cast<double>(w - 1) * 2.0 - 1.0;
        p.y(k) = py / static_cast<double>(h - 1) * 2.0 - 1.0;
    }
    return p;
}

Tensor random_tensor(Shape shape, std::mt19937_64& gen, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.values()) v = u(gen);
    return t;
}

// Direct-loop oracle for kernel 4 / stride 2 / padding 1 convolution.
std::vector<double> naive_conv(const Tensor& x, const Grid& in, const Tensor& w, const Tensor& b) {
    const std::size_t cin = x.cols(), cout = w.cols();
    const Grid out = downsample(in);
    std::vector<double> y(out.rows() * cout, 0.0);
    for (std::size_t m = 0; m < out.batch; ++m)
        for (std::size_t f = 0; f < out.frames; ++f)
            for (std::size_t r = 0; r < out.height; ++r)
                for (std::size_t c = 0; c < out.width; ++c)
                    for (std::size_t o = 0; o < cout; ++o) {
                        double s = b[o];
                        for (int kf = 0; kf < 4; ++kf)
                            for (int kh = 0; kh < 4; ++kh)
                                for (int kw = 0; kw < 4; ++kw) {
                                    const int sf = 2 * static_cast<int>(f) + kf - 1;
                                    const int sy = 2 * static_cast<int>(r) + kh - 1;
                                    const int sx = 2 * static_cast<int>(c) + kw - 1;
                                    if (sf < 0 || sy < 0 || sx < 0 || sf >= static_cast<int>(in.frames) ||
                                        sy >= static_cast<int>(in.height) || sx >= static_cast<int>(in.width))
                                        continue;
                                    const std::size_t row = in.row(m, sf, sy, sx);
                                    for (std::size_t i = 0; i < cin; ++i)
                                        s += x.at(row, i) *
                                             w.at(((static_cast<std::size_t>(kf) * 4 + kh) * 4 + kw) * cin + i, o);
                                }
                        y[out.row(m, f, r, c) * cout + o] = s;
                    }
    return y;
}

// Transposed convolution by scattering every input voxel through every tap.
std::vector<double> naive_deconv(const Tensor& x, const Grid& in, const Grid& out, const Tensor& w,
                                 const Tensor& b) {
    const std::size_t cin = x.cols(), cout = b.cols();
    std::vector<double> y(out.rows() * cout, 0.0);
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t o = 0; o < cout; ++o) y[r * cout + o] = b[o];
    for (std::size_t m = 0; m < in.batch; ++m)
        for (std::size_t f = 0; f < in.frames; ++f)
            for (std::size_t r = 0; r < in.height; ++r)
                for (std::size_t c = 0; c < in.width; ++c)
                    for (int kf = 0; kf < 4; ++kf)
                        for (int kh = 0; kh < 4; ++kh)
                            for (int kw = 0; kw < 4; ++kw) {
                                const int of = 2 * static_cast<int>(f) + kf - 1;
                                const int oy = 2 * static_cast<int>(r) + kh - 1;
                                const int ox = 2 * static_cast<int>(c) + kw - 1;
                                if (of < 0 || oy < 0 || ox < 0 || of >= static_cast<int>(out.frames) ||
                                    oy >= static_cast<int>(out.height) || ox >= static_cast<int>(out.width))
                                    continue;
                                const std::size_t tap = (static_cast<std::size_t>(kf) * 4 + kh) * 4 + kw;
                                for (std::size_t o = 0; o < cout; ++o) {
                                    double s = 0.0;
                                    for (std::size_t i = 0; i < cin; ++i)
                                        s += x.at(in.row(m, f, r, c), i) * w.at(i, tap * cout + o);
                                    y[out.row(m, of, oy, ox) * cout + o] += s;
                                }
                            }
    return y;
}

GanConfig toy_config() {
    GanConfig c;
    c.video = {4, 4, 4, 3};
    c.layers = 2;
    c.base_channels = 2;
    c.calibrate_norm = false;
    return c;
}

Video random_video(VideoShape s, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Video v(s);
    for (double& x : v.values) x = u(gen);
    return v;
}

void randomize_norms(SkeletonGan& m, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> s(0.5, 1.5), t(-0.3, 0.3);
    for (std::size_t i = 0; i < m.norms().size(); ++i) {
        const bool is_scale = m.norms().name(i).ends_with(".scale");
        for (double& v : m.norms()[i].values()) v = is_scale ? s(gen) : t(gen);
    }
}

GanTriple gait_triple(VideoShape shape, std::uint64_t index) {
    pose::SynthConfig sc;
    sc.seed = 5;
    const auto seq = pose::synth_sequence(sc, index).sequence;
    return make_triple(seq, sc.past_steps, Appearance::random(5, index), shape);
}

double scalar_d_loss(const std::vector<double>& real, const std::vector<double>& fake) {
    double s = 0.0;
    for (double p : real) s -= std::log(p);
    for (double p : fake) s -= std::log(1.0 - p);
    return s;
}

double scalar_g_loss(const std::vector<double>& fake, const std::vector<double>& g, const std::vector<double>& v,
                     double alpha) {
    double adv = 0.0, l1 = 0.0;
    for (double p : fake) adv -= std::log(p);
    for (std::size_t i = 0; i < g.size(); ++i) l1 += std::fabs(g[i] - v[i]);
    return adv + alpha * l1;
}

}  // namespace

// ---- rasterization ----------------------------------------------------------

TEST(RenderSkeleton, CoincidentKeypointsLightOnePixelPerFrame) {
    const Video v = render_skeleton(still(Pose::filled(0.0), 3), 16, 20, 8);
    EXPECT_EQ(v.shape, (VideoShape{8, 16, 20, 3}));
    for (std::size_t f = 0; f < 8; ++f) {
        EXPECT_EQ(lit_count(v, f), 1u);
        EXPECT_EQ(v.at(f, 8, 10, 0), 1.0);  // round(7.5), round(9.5)
        EXPECT_EQ(v.at(f, 8, 10, 2), 1.0);
    }
}

TEST(RenderSkeleton, PoseOutsideFrameIsBlack) {
    const Video v = render_skeleton(still(Pose::filled(3.0)), 16, 20, 4);
    for (double x : v.values) EXPECT_EQ(x, -1.0);
}

TEST(RenderSkeleton, HorizontalUnitSegmentLightsAboutTenPixels) {
    Pose p = Pose::filled(-0.5);
    for (std::size_t k = 0; k < pose::kKeypoints; ++k) p.y(k) = 0.0;
    p.x(pose::kRElbow) = 0.5;
    p.x(pose::kRWrist) = 0.5;
    const Video v = render_skeleton(still(p), 16, 20, 1);
    std::size_t run = 0, rows_hit = 0;
    for (std::size_t y = 0; y < 16; ++y) {
        std::size_t in_row = 0;
        for (std::size_t x = 0; x < 20; ++x) in_row += v.at(0, y, x, 0) > 0;
        run += in_row;
        rows_hit += in_row > 0;
    }
    EXPECT_EQ(rows_hit, 1u);
    EXPECT_GE(run, 9u);
    EXPECT_LE(run, 11u);
}

TEST(RenderSkeleton, LongSegmentIsClippedToTheFrame) {
    Pose p = Pose::filled(0.0);
    p.x(pose::kNose) = -10.0;
    p.x(pose::kNeck) = 10.0;
    for (std::size_t k = 0; k < pose::kKeypoints; ++k)
        if (k != pose::kNose && k != pose::kNeck) p.x(k) = 10.0;
    const Video v = render_skeleton(still(p), 16, 20, 1);
    for (std::size_t x = 0; x < 20; ++x) EXPECT_EQ(v.at(0, 8, x, 0), 1.0) << x;
    EXPECT_EQ(lit_count(v, 0), 20u);
}

TEST(RenderSkeleton, ValuesAreBinary) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1.4, 1.4);
    for (int trial = 0; trial < 20; ++trial) {
        PoseSequence s;
        for (int i = 0; i < 6; ++i) {
            Pose p;
            for (double& c : p.coords) c = u(gen);
            s.poses.push_back(p);
        }
        for (double x : render_skeleton(s, 16, 20, 8).values) EXPECT_TRUE(x == -1.0 || x == 1.0);
    }
}

TEST(RenderSkeleton, DeterministicAndTranslationConsistent) {
    std::mt19937_64 gen(11);
    const std::size_t W = 20, H = 16;
    for (int trial = 0; trial < 50; ++trial) {
        const Pose p = pixel_pose(gen, W, H, 2);
        Pose right = p, down = p;
        for (std::size_t k = 0; k < pose::kKeypoints; ++k) {
            right.x(k) += 2.0 / static_cast<double>(W - 1);
            down.y(k) += 2.0 / static_cast<double>(H - 1);
        }
        const Video a = render_skeleton(still(p), H, W, 1);
        EXPECT_EQ(a, render_skeleton(still(p), H, W, 1));
        const Video r = render_skeleton(still(right), H, W, 1);
        const Video d = render_skeleton(still(down), H, W, 1);
        EXPECT_EQ(lit_count(a, 0), lit_count(r, 0));
        EXPECT_EQ(lit_count(a, 0), lit_count(d, 0));
        for (std::size_t y = 0; y < H; ++y)
            for (std::size_t x = 0; x < W; ++x) {
                if (x + 1 < W) {
                    EXPECT_EQ(a.at(0, y, x, 0), r.at(0, y, x + 1, 0));
                }
                if (y + 1 < H) {
                    EXPECT_EQ(a.at(0, y, x, 0), d.at(0, y + 1, x, 0));
                }
            }
    }
}

TEST(RenderSkeleton, NearestNeighborTemporalUpsampling) {
    PoseSequence s;
    for (int i = 0; i < 3; ++i) s.poses.push_back(Pose::filled(-0.6 + 0.6 * i));
    const Video v = render_skeleton(s, 16, 20, 8);
    // frame f shows pose floor((f + 0.5) * 3 / 8)
    const std::size_t expected[8] = {0, 0, 0, 1, 1, 2, 2, 2};
    for (std::size_t f = 0; f < 8; ++f) {
        const double c = -0.6 + 0.6 * static_cast<double>(expected[f]);
        const auto [px, py] = to_pixel(c, c, 20, 16);
        EXPECT_EQ(v.at(f, static_cast<std::size_t>(std::lround(py)), static_cast<std::size_t>(std::lround(px)), 0), 1.0)
            << f;
        EXPECT_EQ(lit_count(v, f), 1u);
    }
    const Video same = render_skeleton(s, 16, 20, 3);
    for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(nearest_pose(f, 3, 3), f);
    EXPECT_EQ(lit_count(same, 2), 1u);
}

TEST(RenderSkeleton, RejectsTinyResolution) {
    EXPECT_THROW(render_skeleton(still(Pose{}), 7, 20, 8), std::invalid_argument);
    EXPECT_THROW(render_skeleton(still(Pose{}), 16, 4, 8), std::invalid_argument);
    EXPECT_THROW(render_skeleton(still(Pose{}), 16, 20, 0), std::invalid_argument);
}

TEST(ClipSegment, LiangBarskyEndpoints) {
    double x0 = -5, y0 = 1, x1 = 5, y1 = 1;
    ASSERT_TRUE(clip_segment(x0, y0, x1, y1, 0, 2, 0, 2));
    EXPECT_DOUBLE_EQ(x0, 0);
    EXPECT_DOUBLE_EQ(x1, 2);
    EXPECT_DOUBLE_EQ(y0, 1);
    double a = -1, b = -1, c = -2, d = 5;
    EXPECT_FALSE(clip_segment(a, b, c, d, 0, 2, 0, 2));
}

// ---- conditioning -----------------------------------------------------------

TEST(StackCondition, SixChannelsAndBroadcastFrame) {
    std::mt19937_64 gen(2);
    const Video image = random_video({1, 16, 20, 3}, gen);
    const Video black({8, 16, 20, 3}, -1.0);
    const Video c = stack_condition(image, black);
    EXPECT_EQ(c.shape.channels, 6u);
    EXPECT_EQ(c.shape.frames, 8u);
    for (std::size_t f = 0; f < 8; ++f)
        for (std::size_t y = 0; y < 16; ++y)
            for (std::size_t x = 0; x < 20; ++x)
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    EXPECT_EQ(c.at(f, y, x, ch), -1.0);
                    EXPECT_EQ(c.at(f, y, x, 3 + ch), image.at(0, y, x, ch));
                }
}

TEST(StackCondition, RejectsSpatialMismatch) {
    EXPECT_THROW(stack_condition(Video({1, 16, 20, 3}), Video({8, 16, 21, 3})), std::invalid_argument);
    EXPECT_THROW(stack_condition(Video({1, 15, 20, 3}), Video({8, 16, 20, 3})), std::invalid_argument);
}

TEST(MakeTriple, ImageIsFirstFrameOfTarget) {
    const GanTriple t = gait_triple({8, 16, 20, 3}, 4);
    EXPECT_EQ(t.image, first_frame(t.target));
    EXPECT_TRUE(t.target.in_unit_range());
    for (double x : t.skeleton.values) EXPECT_TRUE(x == -1.0 || x == 1.0);
    EXPECT_EQ(t.condition().shape, (VideoShape{8, 16, 20, 6}));
}

// ---- convolution ------------------------------------------------------------

TEST(Conv3d, MatchesDirectLoops) {
    std::mt19937_64 gen(7);
    for (const Grid in : {Grid{2, 4, 4, 4}, Grid{1, 3, 5, 6}, Grid{1, 1, 2, 3}}) {
        const Tensor x = random_tensor({in.rows(), 2}, gen);
        const Tensor w = random_tensor({64 * 2, 3}, gen);
        const Tensor b = random_tensor({1, 3}, gen);
        Tape tape;
        Var y = conv3d(tape.constant(x), in, tape.constant(w), tape.constant(b));
        const auto want = naive_conv(x, in, w, b);
        ASSERT_EQ(y.value().size(), want.size());
        EXPECT_EQ(y.rows(), downsample(in).rows());
        for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(y.value()[i], want[i], 1e-12);
    }
}

TEST(Conv3d, OutputExtentHalvesRoundingUp) {
    EXPECT_EQ(halve(16), 8u);
    EXPECT_EQ(halve(5), 3u);
    EXPECT_EQ(halve(1), 1u);
}

TEST(Conv3dTranspose, MatchesDirectScatter) {
    std::mt19937_64 gen(8);
    for (const Grid out : {Grid{2, 4, 4, 4}, Grid{1, 2, 5, 6}, Grid{1, 1, 3, 2}}) {
        const Grid in = downsample(out);
        const Tensor x = random_tensor({in.rows(), 3}, gen);
        const Tensor w = random_tensor({3, 64 * 2}, gen);
        const Tensor b = random_tensor({1, 2}, gen);
        Tape tape;
        Var y = conv3d_transpose(tape.constant(x), in, out, tape.constant(w), tape.constant(b));
        const auto want = naive_deconv(x, in, out, w, b);
        ASSERT_EQ(y.value().size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(y.value()[i], want[i], 1e-12);
    }
}

TEST(Conv3d, ShapeErrors) {
    Tape tape;
    Var x = tape.constant(Tensor::zeros({64, 2}));
    EXPECT_THROW(conv3d(x, Grid{1, 4, 4, 3}, tape.constant(Tensor::zeros({128, 1})), tape.constant(Tensor::zeros({1, 1}))),
                 std::invalid_argument);
    EXPECT_THROW(conv3d(x, Grid{1, 4, 4, 4}, tape.constant(Tensor::zeros({127, 1})), tape.constant(Tensor::zeros({1, 1}))),
                 std::invalid_argument);
    EXPECT_THROW(conv3d_transpose(x, Grid{1, 4, 4, 4}, Grid{1, 4, 4, 4}, tape.constant(Tensor::zeros({2, 64})),
                                  tape.constant(Tensor::zeros({1, 1}))),
                 std::invalid_argument);
}

TEST(Conv3d, GradientsPassFiniteDifferences) {
    std::mt19937_64 gen(9);
    ad::ParameterSet ps;
    const Grid in{1, 4, 4, 4};
    ps.add("x", random_tensor({in.rows(), 2}, gen));
    ps.add("w", random_tensor({128, 2}, gen, 0.3));
    ps.add("b", random_tensor({1, 2}, gen));
    ps.add("tw", random_tensor({2, 64 * 3}, gen, 0.3));
    ps.add("tb", random_tensor({1, 3}, gen));
    const Tensor r = random_tensor({in.rows(), 3}, gen);
    auto f = [&](Tape& t) {
        Var h = ad::tanh(conv3d(t.param(ps, "x"), in, t.param(ps, "w"), t.param(ps, "b")));
        Var y = conv3d_transpose(h, downsample(in), in, t.param(ps, "tw"), t.param(ps, "tb"));
        return ad::sum(ad::mul(y, t.constant(r)));
    };
    EXPECT_LT(ad::gradient_check(f, ps, 1e-4), 1e-4);
}

// ---- networks ---------------------------------------------------------------

TEST(SkeletonGanNet, ZeroWeightsGiveZeroVideoAndHalfProbability) {
    SkeletonGan m(GanConfig::desk(), 1);
    m.generator().fill(0.0);
    m.discriminator().fill(0.0);
    std::mt19937_64 gen(1);
    const Video cond = random_video({8, 16, 20, 6}, gen);
    const Video out = m.generate(cond);
    EXPECT_EQ(out.shape, (VideoShape{8, 16, 20, 3}));
    for (double x : out.values) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(m.discriminate(random_video({8, 16, 20, 3}, gen)), 0.5);
}

TEST(SkeletonGanNet, OutputsStayBounded) {
    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 100; ++trial) {
        SkeletonGan m(GanConfig::desk(), static_cast<std::uint64_t>(trial));
        for (std::size_t i = 0; i < m.generator().size(); ++i)
            for (double& v : m.generator()[i].values()) v *= 5.0;
        for (std::size_t i = 0; i < m.discriminator().size(); ++i)
            for (double& v : m.discriminator()[i].values()) v *= 5.0;
        const Video g = m.generate(random_video({8, 16, 20, 6}, gen));
        double worst = 0.0;
        for (double x : g.values) worst = std::max(worst, std::fabs(x));
        EXPECT_LE(worst, 1.0);
        const double p = m.discriminate(g);
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(SkeletonGanNet, DiscriminatorIsDeterministic) {
    SkeletonGan m(GanConfig::desk(), 2);
    std::mt19937_64 gen(5);
    const Video v = random_video({8, 16, 20, 3}, gen);
    EXPECT_EQ(m.discriminate(v), m.discriminate(v));
    EXPECT_EQ(SkeletonGan(GanConfig::desk(), 2).generator(), m.generator());
}

TEST(SkeletonGanNet, RejectsMismatchedShapes) {
    SkeletonGan m(GanConfig::desk(), 2);
    EXPECT_THROW(m.discriminate(Video({8, 16, 21, 3})), std::invalid_argument);
    EXPECT_THROW(m.generate(Video({8, 16, 20, 3})), std::invalid_argument);
}

TEST(SkeletonGanNet, DiscriminatorInputGradientPassesFiniteDifferences) {
    SkeletonGan m(toy_config(), 3);
    std::mt19937_64 gen(6);
    randomize_norms(m, gen);
    const Video v = random_video({4, 4, 4, 3}, gen);
    const Tensor point = stack_videos({&v});
    auto f = [&](Tape& t, Var x) { return ad::sum(m.discriminate(t, x, 1)); };
    EXPECT_LT(ad::gradient_check(f, point, 1e-4), 1e-4);
}

TEST(SkeletonGanNet, DiscriminatorLossGradientPassesFiniteDifferences) {
    SkeletonGan m(toy_config(), 4);
    std::mt19937_64 gen(7);
    randomize_norms(m, gen);
    const Video real = random_video({4, 4, 4, 3}, gen), fake = random_video({4, 4, 4, 3}, gen);
    auto f = [&](Tape& t) { return discriminator_loss(m.discriminate(t, {&real}), m.discriminate(t, {&fake})); };
    EXPECT_LT(ad::gradient_check(f, m.discriminator(), 1e-4), 1e-4);
}

TEST(SkeletonGanNet, GeneratorLossGradientPassesFiniteDifferences) {
    SkeletonGan m(toy_config(), 5);
    std::mt19937_64 gen(8);
    randomize_norms(m, gen);
    const Video cond = random_video({4, 4, 4, 6}, gen), target = random_video({4, 4, 4, 3}, gen);
    auto f = [&](Tape& t) {
        Var g = m.generate(t, {&cond});
        return generator_loss(m.discriminate(t, g, 1), g, t.constant(stack_videos({&target})), 0.5);
    };
    EXPECT_LT(ad::gradient_check(f, m.generator(), 1e-4), 1e-4);
}

// ---- losses -----------------------------------------------------------------

TEST(GanLosses, DiscriminatorClosedForms) {
    Tape t;
    auto probs = [&](std::vector<double> v) {
        const std::size_t n = v.size();
        return t.constant(Tensor({n, 1}, std::move(v)));
    };
    EXPECT_NEAR(discriminator_loss(probs({0.5}), probs({0.5})).value()[0], 2.0 * std::log(2.0), 1e-12);
    EXPECT_LT(discriminator_loss(probs({1 - 1e-12}), probs({1e-12})).value()[0], 1e-10);
    EXPECT_THROW(discriminator_loss(probs({1.0}), probs({0.5})), std::domain_error);
    EXPECT_THROW(discriminator_loss(probs({0.5}), probs({0.0})), std::domain_error);
}

TEST(GanLosses, GeneratorClosedForms) {
    Tape t;
    Var p = t.constant(Tensor({1, 1}, {0.5}));
    Var v = t.constant(Tensor({4, 3}, std::vector<double>(12, 0.25)));
    std::vector<double> off(12, 0.25);
    off[5] += 0.001;
    Var g = t.constant(Tensor({4, 3}, off));
    EXPECT_NEAR(generator_loss(p, v, v, 1000.0).value()[0], std::log(2.0), 1e-12);
    EXPECT_NEAR(generator_loss(p, g, v, 1000.0).value()[0], std::log(2.0) + 1.0, 1e-9);
    EXPECT_NEAR(generator_loss(p, g, v, 0.0).value()[0], std::log(2.0), 1e-12);
    EXPECT_THROW(generator_loss(p, g, v, -1.0), std::invalid_argument);
    EXPECT_THROW(generator_loss(p, g, t.constant(Tensor::zeros({3, 4})), 1.0), std::invalid_argument);
}

TEST(GanLosses, MatchScalarHandComputation) {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> up(1e-6, 1 - 1e-6), uv(-1, 1), ua(0, 2000);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t nr = 1 + trial % 4, nf = 1 + trial % 3, nv = 5 + trial % 7;
        std::vector<double> r(nr), f(nf), g(nv), v(nv);
        for (double& x : r) x = up(gen);
        for (double& x : f) x = up(gen);
        for (double& x : g) x = uv(gen);
        for (double& x : v) x = uv(gen);
        const double alpha = ua(gen);
        Tape t;
        Var R = t.constant(Tensor({nr, 1}, r)), F = t.constant(Tensor({nf, 1}, f));
        Var G = t.constant(Tensor({nv, 1}, g)), V = t.constant(Tensor({nv, 1}, v));
        const double d = scalar_d_loss(r, f), gl = scalar_g_loss(f, g, v, alpha);
        EXPECT_NEAR(discriminator_loss(R, F).value()[0], d, 1e-12 * std::max(1.0, d));
        EXPECT_NEAR(generator_loss(F, G, V, alpha).value()[0], gl, 1e-12 * std::max(1.0, gl));
    }
}

// ---- training ---------------------------------------------------------------

TEST(GanTraining, OddBatchIsRejected) {
    SkeletonGan m(GanConfig::desk(), 1);
    GanTrainer tr(m);
    const GanTriple t = gait_triple(m.config().video, 0);
    EXPECT_THROW(tr.step({&t, &t, &t}), std::invalid_argument);
    EXPECT_THROW(tr.step({}), std::invalid_argument);
    GanConfig odd;
    odd.batch_size = 3;
    EXPECT_THROW(odd.validate(), std::invalid_argument);
}

TEST(GanTraining, SeededRunsAreIdentical) {
    std::vector<GanTriple> data;
    for (std::uint64_t i = 0; i < 4; ++i) data.push_back(gait_triple({8, 16, 20, 3}, i));
    GanConfig cfg;
    cfg.seed = 9;
    cfg.batch_size = 4;
    const auto a = train_gan(data, cfg, 5), b = train_gan(data, cfg, 5);
    ASSERT_EQ(a.log.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(a.log[i].d_loss, b.log[i].d_loss);
        EXPECT_EQ(a.log[i].g_loss, b.log[i].g_loss);
    }
    EXPECT_EQ(a.model.generator(), b.model.generator());
}

TEST(GanTraining, SingleTripleReconstructionConverges) {
    const GanTriple t = gait_triple({8, 16, 20, 3}, 2);
    SkeletonGan m(GanConfig::desk(), 21);
    GanTrainer tr(m);
    for (int it = 0; it < 3000; ++it) tr.step({&t, &t});
    const Video g = m.generate(t.condition());
    double mae = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) mae += std::fabs(g.values[i] - t.target.values[i]);
    mae /= static_cast<double>(g.values.size());
    EXPECT_LT(mae, 0.05);
}

TEST(GanTraining, DiscriminatorOnlyLossDecreases) {
    std::vector<GanTriple> data;
    for (std::uint64_t i = 0; i < 4; ++i) data.push_back(gait_triple({8, 16, 20, 3}, i));
    SkeletonGan m(GanConfig::desk(), 22);
    const ad::ParameterSet g0 = m.generator();
    GanTrainer tr(m);
    std::vector<double> losses;
    for (int it = 0; it < 200; ++it) losses.push_back(tr.discriminator_only({&data[0], &data[1], &data[2], &data[3]}));
    EXPECT_EQ(m.generator(), g0);
    double first = 0, last = 0;
    for (int i = 0; i < 20; ++i) {
        first += losses[i];
        last += losses[180 + i];
    }
    EXPECT_LT(last, first);
}

TEST(GanTraining, CheckpointRoundTrip) {
    std::vector<GanTriple> data{gait_triple({8, 16, 20, 3}, 1)};
    const auto r = train_gan(data, GanConfig::desk(), 2);
    const auto path = std::filesystem::temp_directory_path() / "posef_test_gan.ckpt";
    save_gan(r.model, path);
    const SkeletonGan back = load_gan(path);
    EXPECT_EQ(back.generator(), r.model.generator());
    EXPECT_EQ(back.discriminator(), r.model.discriminator());
    EXPECT_EQ(back.norms(), r.model.norms());
    EXPECT_TRUE(back.calibrated());
    EXPECT_EQ(back.generate(data[0].condition()), r.model.generate(data[0].condition()));
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
}

TEST(GanConfigTest, SettingsAndPresets) {
    Settings s = Settings::parse("alpha = 10\nbatch_size = 4\nlayers = 2\n", "test");
    const GanConfig c = GanConfig::from_settings(s);
    EXPECT_EQ(c.alpha, 10.0);
    EXPECT_EQ(c.batch_size, 4u);
    EXPECT_EQ(c.layers, 2u);
    EXPECT_EQ(GanConfig::full().video, (VideoShape{32, 64, 80, 3}));
    EXPECT_EQ(GanConfig::full().layers, 5u);
    EXPECT_EQ(GanConfig::from_json(c.to_json()).to_json(), c.to_json());
    EXPECT_THROW(GanConfig::from_settings(Settings::parse("alfa = 1\n", "test")), std::invalid_argument);
}

// ---- video files ------------------------------------------------------------

TEST(VideoIo, RoundTripAndPgm) {
    std::mt19937_64 gen(3);
    Video a = random_video({2, 8, 9, 3}, gen);
    for (double& x : a.values) x = static_cast<float>(x);
    const Video b({1, 8, 8, 3}, 0.5);
    const auto dir = std::filesystem::temp_directory_path() / "posef_test_video";
    std::filesystem::create_directories(dir);
    save_videos(dir / "v.pfv", {a, b});
    const auto back = load_videos(dir / "v.pfv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], a);
    EXPECT_EQ(back[1], b);
    const auto frames = dump_pgm_frames(dir / "clip", a);
    ASSERT_EQ(frames.size(), 2u);
    EXPECT_EQ(frames[1].filename(), "clip_f01.pgm");
    EXPECT_EQ(std::filesystem::file_size(frames[0]), std::string("P5\n9 8\n255\n").size() + 72);
    std::filesystem::remove_all(dir);
}

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "posef/core/adam.hpp"
#include "posef/core/autodiff.hpp"
#include "posef/core/checkpoint.hpp"
#include "posef/core/rng.hpp"
#include "posef/core/settings.hpp"
#include "posef/gan/conv.hpp"
#include "posef/gan/raster.hpp"
#include "posef/gan/video.hpp"

namespace posef::gan {

using ad::ParameterSet;
using ad::Tape;

inline constexpr double kProbFloor = 1e-12;

struct GanConfig {
    VideoShape video{8, 16, 20, 3};
    std::size_t layers = 3;
    std::size_t base_channels = 16;  // doubles per layer
    double alpha = 1000.0;
    std::size_t batch_size = 2;
    double learning_rate = 0.0002;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    bool calibrate_norm = true;  // fix the affine normalization from the first batch

    static GanConfig desk() { return {}; }
    // 64x80, 32 frames, five layers: time reaches extent 1 after the last layer.
    static GanConfig full() {
        GanConfig c;
        c.video = {32, 64, 80, 3};
        c.layers = 5;
        c.base_channels = 32;
        return c;
    }

    std::size_t channels(std::size_t layer) const { return base_channels << (layer - 1); }

    void validate() const {
        if (batch_size == 0 || batch_size % 2 != 0)
            throw std::invalid_argument("gan: batch size must be even, got " + std::to_string(batch_size));
        if (!(alpha >= 0)) throw std::invalid_argument("gan: alpha must be >= 0");
        if (layers < 1 || base_channels < 1) throw std::invalid_argument("gan: layers and channels must be positive");
        if (video.channels != 3) throw std::invalid_argument("gan: videos must have 3 channels");
        if (video.height < 1 || video.width < 1 || video.frames < 1)
            throw std::invalid_argument("gan: video extents must be positive");
        if (!(learning_rate > 0) || !(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
            throw std::invalid_argument("gan: bad Adam settings");
    }

    static const std::set<std::string>& keys() {
        static const std::set<std::string> k{"frames", "height",    "width", "layers", "base_channels", "alpha",
                                             "batch_size", "learning_rate", "beta1", "beta2", "seed", "calibrate_norm"};
        return k;
    }

    static GanConfig from_settings(const Settings& s) { return from_settings(s, GanConfig{}); }

    // Keys in `s` override `c`.
    static GanConfig from_settings(const Settings& s, GanConfig c) {
        s.require_known(keys());
        c.video.frames = s.get_u64("frames", c.video.frames);
        c.video.height = s.get_u64("height", c.video.height);
        c.video.width = s.get_u64("width", c.video.width);
        c.layers = s.get_u64("layers", c.layers);
        c.base_channels = s.get_u64("base_channels", c.base_channels);
        c.alpha = s.get_double("alpha", c.alpha);
        c.batch_size = s.get_u64("batch_size", c.batch_size);
        c.learning_rate = s.get_double("learning_rate", c.learning_rate);
        c.beta1 = s.get_double("beta1", c.beta1);
        c.beta2 = s.get_double("beta2", c.beta2);
        c.seed = s.get_u64("seed", c.seed);
        c.calibrate_norm = s.get_bool("calibrate_norm", c.calibrate_norm);
        c.validate();
        return c;
    }

    nlohmann::json to_json() const {
        return {{"model", "skeleton-gan"}, {"frames", video.frames},
                {"height", video.height},  {"width", video.width},
                {"layers", layers},        {"base_channels", base_channels},
                {"alpha", alpha},          {"batch_size", batch_size},
                {"learning_rate", learning_rate}, {"beta1", beta1},
                {"beta2", beta2},          {"seed", seed},
                {"calibrate_norm", calibrate_norm}};
    }

    static GanConfig from_json(const nlohmann::json& j) {
        GanConfig c;
        c.video.frames = j.at("frames").get<std::size_t>();
        c.video.height = j.at("height").get<std::size_t>();
        c.video.width = j.at("width").get<std::size_t>();
        c.layers = j.at("layers").get<std::size_t>();
        c.base_channels = j.at("base_channels").get<std::size_t>();
        c.alpha = j.at("alpha").get<double>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.beta1 = j.at("beta1").get<double>();
        c.beta2 = j.at("beta2").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.calibrate_norm = j.at("calibrate_norm").get<bool>();
        c.validate();
        return c;
    }
};

// Stacks M videos of equal shape into a [M*voxels, C] matrix.
inline Tensor stack_videos(const std::vector<const Video*>& videos) {
    if (videos.empty()) throw std::invalid_argument("stack_videos: empty batch");
    const VideoShape s = videos.front()->shape;
    std::vector<double> out;
    out.reserve(videos.size() * s.size());
    for (const Video* v : videos) {
        if (v->shape != s) throw std::invalid_argument("stack_videos: shape " + v->shape.str() + " vs " + s.str());
        out.insert(out.end(), v->values.begin(), v->values.end());
    }
    return Tensor({videos.size() * s.voxels(), s.channels}, std::move(out));
}

inline Video unstack_video(const Tensor& t, VideoShape shape, std::size_t m) {
    if (t.cols() != shape.channels || t.rows() < (m + 1) * shape.voxels())
        throw std::invalid_argument("unstack_video: tensor does not hold video " + std::to_string(m));
    Video v(shape);
    const auto src = t.values().subspan(m * shape.size(), shape.size());
    std::copy(src.begin(), src.end(), v.values.begin());
    return v;
}

// Discriminator loss: sum of -ln p over reals plus -ln(1 - p) over fakes.
inline Var discriminator_loss(Var real_p, Var fake_p) {
    for (Var p : {real_p, fake_p}) {
        if (p.value().size() == 0) throw std::invalid_argument("discriminator_loss: empty probability list");
        for (double v : p.value().values())
            if (!(v > 0.0 && v < 1.0))
                throw std::domain_error("discriminator_loss: probability " + std::to_string(v) + " outside (0, 1)");
    }
    Tape& tape = *fake_p.tape;
    Var one = tape.constant(Tensor::filled(fake_p.shape(), 1.0));
    return -(ad::sum(ad::log(real_p)) + ad::sum(ad::log(one - fake_p)));
}

// Generator loss: sum of -ln p over fakes plus alpha * ||G - V||_1.
inline Var generator_loss(Var fake_p, Var generated, Var target, double alpha) {
    if (!(alpha >= 0)) throw std::invalid_argument("generator_loss: alpha must be >= 0");
    if (generated.shape() != target.shape())
        throw std::invalid_argument("generator_loss: generated " + shape_str(generated.shape()) + " vs target " +
                                    shape_str(target.shape()));
    for (double v : fake_p.value().values())
        if (!(v > 0.0 && v < 1.0))
            throw std::domain_error("generator_loss: probability " + std::to_string(v) + " outside (0, 1)");
    Var adv = -ad::sum(ad::log(fake_p));
    if (alpha == 0.0) return adv;
    return adv + ad::scale(ad::sum(ad::abs(generated - target)), alpha);
}

// Conditional video generator (conv encoder-decoder with skips) and a
// conv discriminator. Normalization constants live in norms(), outside the
// trainable sets.
class SkeletonGan {
   public:
    SkeletonGan() = default;

    SkeletonGan(const GanConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(seed, "gan/init");
        const std::size_t L = cfg_.layers;
        for (std::size_t l = 1; l <= L; ++l) {
            add_conv_params(gen_, "g.enc" + std::to_string(l), l == 1 ? 6 : cfg_.channels(l - 1), cfg_.channels(l),
                            false, rng);
            if (l >= 2) add_norm("g.enc" + std::to_string(l), cfg_.channels(l));
        }
        for (std::size_t l = L; l >= 1; --l) {
            const std::size_t cin = l == L ? cfg_.channels(L) : 2 * cfg_.channels(l);
            const std::size_t cout = l > 1 ? cfg_.channels(l - 1) : 3;
            add_conv_params(gen_, "g.dec" + std::to_string(l), cin, cout, true, rng);
            if (l > 1) add_norm("g.dec" + std::to_string(l), cout);
        }
        for (std::size_t l = 1; l <= L; ++l) {
            add_conv_params(disc_, "d.conv" + std::to_string(l), l == 1 ? 3 : cfg_.channels(l - 1), cfg_.channels(l),
                            false, rng);
            if (l >= 2) add_norm("d.conv" + std::to_string(l), cfg_.channels(l));
        }
        const std::size_t feat = grid(1, L).rows() * cfg_.channels(L);
        const double a = 1.0 / std::sqrt(static_cast<double>(feat));
        Tensor w = Tensor::zeros({feat, 1});
        for (double& v : w.values()) v = rng.uniform(-a, a);
        disc_.add("d.out.w", std::move(w));
        disc_.add("d.out.b", Tensor::zeros({1, 1}));
    }

    const GanConfig& config() const { return cfg_; }
    ParameterSet& generator() { return gen_; }
    const ParameterSet& generator() const { return gen_; }
    ParameterSet& discriminator() { return disc_; }
    const ParameterSet& discriminator() const { return disc_; }
    ParameterSet& norms() { return norm_; }
    const ParameterSet& norms() const { return norm_; }

    // Grid of `batch` videos after `level` stride-2 layers.
    Grid grid(std::size_t batch, std::size_t level) const {
        Grid g{batch, cfg_.video.frames, cfg_.video.height, cfg_.video.width};
        for (std::size_t l = 0; l < level; ++l) g = downsample(g);
        return g;
    }

    // cond: [M*voxels, 6] -> [M*voxels, 3] in [-1, 1].
    Var generate(Tape& tape, Var cond, std::size_t batch) const { return gen_forward(tape, cond, batch, nullptr); }

    // videos: [M*voxels, 3] -> [M, 1] probabilities clamped into (0, 1).
    Var discriminate(Tape& tape, Var videos, std::size_t batch) const {
        return disc_forward(tape, videos, batch, nullptr);
    }

    Var generate(Tape& tape, const std::vector<const Video*>& conditions) const {
        check_shape(conditions, 6, "generator");
        return generate(tape, tape.constant(stack_videos(conditions)), conditions.size());
    }

    Var discriminate(Tape& tape, const std::vector<const Video*>& videos) const {
        check_shape(videos, 3, "discriminator");
        return discriminate(tape, tape.constant(stack_videos(videos)), videos.size());
    }

    Video generate(const Video& condition) const {
        Tape tape;
        Var out = generate(tape, std::vector<const Video*>{&condition});
        VideoShape s = cfg_.video;
        return unstack_video(out.value(), s, 0);
    }

    double discriminate(const Video& video) const {
        Tape tape;
        return discriminate(tape, std::vector<const Video*>{&video}).value()[0];
    }

    // Sets each normalization to the per-channel standardization of the
    // activations seen on this batch; later calls leave it fixed.
    void calibrate(const std::vector<const Video*>& conditions, const std::vector<const Video*>& reals) {
        Tape tape;
        Var fake = gen_forward(tape, tape.constant(stack_videos(conditions)), conditions.size(), &norm_);
        Var all = ad::concat({tape.constant(stack_videos(reals)), tape.detach(fake)}, 0);
        disc_forward(tape, all, reals.size() + conditions.size(), &norm_);
        calibrated_ = true;
    }
    bool calibrated() const { return calibrated_; }
    void set_calibrated(bool v) { calibrated_ = v; }

   private:
    void add_norm(const std::string& layer, std::size_t channels) {
        norm_.add(layer + ".scale", Tensor::filled({1, channels}, 1.0));
        norm_.add(layer + ".shift", Tensor::zeros({1, channels}));
    }

    void check_shape(const std::vector<const Video*>& videos, std::size_t channels, const char* who) const {
        VideoShape want = cfg_.video;
        want.channels = channels;
        for (const Video* v : videos)
            if (v->shape != want)
                throw std::invalid_argument(std::string(who) + ": expected " + want.str() + ", got " + v->shape.str());
    }

    Var conv(Tape& tape, const ParameterSet& set, const std::string& name, Var x, const Grid& in) const {
        return conv3d(x, in, tape.param(set, name + ".w"), tape.param(set, name + ".b"));
    }

    Var deconv(Tape& tape, const std::string& name, Var x, const Grid& in, const Grid& out) const {
        return conv3d_transpose(x, in, out, tape.param(gen_, name + ".w"), tape.param(gen_, name + ".b"));
    }

    Var normalize(Tape& tape, const std::string& layer, Var x, ParameterSet* collect) const {
        if (collect) {
            const Tensor& v = x.value();
            const std::size_t r = v.rows(), c = v.cols();
            Tensor& scale = (*collect)[layer + ".scale"];
            Tensor& shift = (*collect)[layer + ".shift"];
            for (std::size_t j = 0; j < c; ++j) {
                double mean = 0.0, sq = 0.0;
                for (std::size_t i = 0; i < r; ++i) mean += v.at(i, j);
                mean /= static_cast<double>(r);
                for (std::size_t i = 0; i < r; ++i) sq += (v.at(i, j) - mean) * (v.at(i, j) - mean);
                const double s = 1.0 / std::sqrt(sq / static_cast<double>(r) + 1e-5);
                scale[j] = s;
                shift[j] = -mean * s;
            }
        }
        return ad::add(ad::mul(x, tape.constant(norm_[layer + ".scale"])), tape.constant(norm_[layer + ".shift"]));
    }

    Var gen_forward(Tape& tape, Var x, std::size_t batch, ParameterSet* collect) const {
        const std::size_t L = cfg_.layers;
        if (x.rows() != grid(batch, 0).rows() || x.cols() != 6)
            throw std::invalid_argument("generator: input " + shape_str(x.shape()) + " does not match " +
                                        std::to_string(batch) + " conditioned videos " + cfg_.video.str() + "x6");
        std::vector<Var> enc{x};
        for (std::size_t l = 1; l <= L; ++l) {
            const std::string name = "g.enc" + std::to_string(l);
            Var h = conv(tape, gen_, name, enc.back(), grid(batch, l - 1));
            if (l >= 2) h = normalize(tape, name, h, collect);
            enc.push_back(ad::leaky_relu(h));
        }
        Var d = enc[L];
        for (std::size_t l = L; l >= 1; --l) {
            const std::string name = "g.dec" + std::to_string(l);
            d = deconv(tape, name, d, grid(batch, l), grid(batch, l - 1));
            if (l == 1) return ad::tanh(d);
            d = ad::relu(normalize(tape, name, d, collect));
            d = ad::concat({d, enc[l - 1]}, 1);
        }
        return d;
    }

    Var disc_forward(Tape& tape, Var x, std::size_t batch, ParameterSet* collect) const {
        const std::size_t L = cfg_.layers;
        if (x.rows() != grid(batch, 0).rows() || x.cols() != 3)
            throw std::invalid_argument("discriminator: input " + shape_str(x.shape()) + " does not match " +
                                        std::to_string(batch) + " videos " + cfg_.video.str());
        Var h = x;
        for (std::size_t l = 1; l <= L; ++l) {
            const std::string name = "d.conv" + std::to_string(l);
            h = conv(tape, disc_, name, h, grid(batch, l - 1));
            if (l >= 2) h = normalize(tape, name, h, collect);
            h = ad::leaky_relu(h);
        }
        Var flat = ad::reshape(h, {batch, h.value().size() / batch});
        Var logit = ad::add(ad::matmul(flat, tape.param(disc_, "d.out.w")), tape.param(disc_, "d.out.b"));
        return ad::clamp(ad::sigmoid(logit), kProbFloor, 1.0 - kProbFloor);
    }

    GanConfig cfg_;
    ParameterSet gen_, disc_, norm_;
    bool calibrated_ = false;
};

// One training example: input frame I (1 frame), skeleton video S_T and the
// real future video V.
struct GanTriple {
    Video image;
    Video skeleton;
    Video target;

    Video condition() const { return stack_condition(image, skeleton); }
};

// Poses from `start` on, rendered as skeleton and as appearance video; I is
// the first frame of V.
inline GanTriple make_triple(const pose::PoseSequence& seq, std::size_t start, const Appearance& look,
                             VideoShape shape) {
    if (start >= seq.size()) throw std::invalid_argument("make_triple: start beyond sequence");
    pose::PoseSequence tail;
    tail.context = seq.context;
    tail.poses.assign(seq.poses.begin() + static_cast<std::ptrdiff_t>(start), seq.poses.end());
    GanTriple t;
    t.target = render_appearance(tail, look, shape);
    t.image = first_frame(t.target);
    t.skeleton = render_skeleton(tail, shape.height, shape.width, shape.frames);
    return t;
}

struct GanStepLosses {
    double d_loss = 0.0;
    double g_loss = 0.0;
    double l1 = 0.0;  // mean absolute error of G on the fake half
};

// Adam state for both players. The first half of each batch supplies real
// videos, the second half the conditions for generated ones.
class GanTrainer {
   public:
    explicit GanTrainer(SkeletonGan& model)
        : model_(&model),
          gen_opt_(model.generator(), opts(model.config())),
          disc_opt_(model.discriminator(), opts(model.config())) {}

    GanStepLosses step(const std::vector<const GanTriple*>& batch) {
        const auto [reals, conds] = split(batch);
        GanStepLosses out;
        out.d_loss = discriminator_step(reals, conds);
        Tape tape;
        Var fake = model_->generate(tape, ptrs(conds));
        Var p = model_->discriminate(tape, fake, conds.size());
        Var target = tape.constant(stack_videos(targets(batch, batch.size() / 2)));
        Var loss = generator_loss(p, fake, target, model_->config().alpha);
        auto grads = tape.backward(loss);
        gen_opt_.step(model_->generator(), grads.params(model_->generator()));
        out.g_loss = loss.value()[0];
        out.l1 = mean_abs(fake.value(), target.value());
        return out;
    }

    // D update only; G is held fixed.
    double discriminator_only(const std::vector<const GanTriple*>& batch) {
        const auto [reals, conds] = split(batch);
        return discriminator_step(reals, conds);
    }

   private:
    static ad::AdamOptions opts(const GanConfig& c) {
        ad::AdamOptions o;
        o.learning_rate = c.learning_rate;
        o.beta1 = c.beta1;
        o.beta2 = c.beta2;
        return o;
    }

    static std::vector<const Video*> ptrs(const std::vector<Video>& v) {
        std::vector<const Video*> out;
        for (const auto& x : v) out.push_back(&x);
        return out;
    }

    static std::vector<const Video*> targets(const std::vector<const GanTriple*>& batch, std::size_t from) {
        std::vector<const Video*> out;
        for (std::size_t i = from; i < batch.size(); ++i) out.push_back(&batch[i]->target);
        return out;
    }

    static double mean_abs(const Tensor& a, const Tensor& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += std::fabs(a[i] - b[i]);
        return s / static_cast<double>(a.size());
    }

    std::pair<std::vector<const Video*>, std::vector<Video>> split(const std::vector<const GanTriple*>& batch) {
        if (batch.empty() || batch.size() % 2 != 0)
            throw std::invalid_argument("gan_train_step: batch size must be even, got " + std::to_string(batch.size()));
        const std::size_t half = batch.size() / 2;
        std::vector<const Video*> reals;
        std::vector<Video> conds;
        for (std::size_t i = 0; i < half; ++i) reals.push_back(&batch[i]->target);
        for (std::size_t i = half; i < batch.size(); ++i) conds.push_back(batch[i]->condition());
        if (model_->config().calibrate_norm && !model_->calibrated()) model_->calibrate(ptrs(conds), reals);
        return {reals, conds};
    }

    double discriminator_step(const std::vector<const Video*>& reals, const std::vector<Video>& conds) {
        Tape tape;
        Var fake = tape.detach(model_->generate(tape, ptrs(conds)));
        Var pr = model_->discriminate(tape, reals);
        Var pf = model_->discriminate(tape, fake, conds.size());
        Var loss = discriminator_loss(pr, pf);
        auto grads = tape.backward(loss);
        disc_opt_.step(model_->discriminator(), grads.params(model_->discriminator()));
        return loss.value()[0];
    }

    SkeletonGan* model_;
    ad::Adam gen_opt_, disc_opt_;
};

// Convenience: one step on a fresh or existing trainer.
inline GanStepLosses gan_train_step(GanTrainer& trainer, const std::vector<const GanTriple*>& batch) {
    return trainer.step(batch);
}

struct GanLogRow {
    std::size_t iteration = 0;
    double d_loss = 0.0, g_loss = 0.0, l1 = 0.0;
};

struct GanTrainResult {
    SkeletonGan model;
    std::vector<GanLogRow> log;
};

// Minibatches drawn with replacement from stream ("gan/batch", iteration).
inline GanTrainResult train_gan(const std::vector<GanTriple>& data, const GanConfig& cfg, std::size_t iterations) {
    if (data.empty()) throw std::invalid_argument("train_gan: no training triples");
    GanTrainResult r{SkeletonGan(cfg, cfg.seed), {}};
    GanTrainer trainer(r.model);
    for (std::size_t it = 0; it < iterations; ++it) {
        Rng rng(cfg.seed, "gan/batch", it);
        std::vector<const GanTriple*> batch;
        for (std::size_t i = 0; i < cfg.batch_size; ++i) batch.push_back(&data[rng.index(data.size())]);
        const GanStepLosses l = trainer.step(batch);
        r.log.push_back({it, l.d_loss, l.g_loss, l.l1});
    }
    return r;
}

// Checkpoint holds generator, discriminator and normalization tensors;
// `path.json` holds the config.
inline void save_gan(const SkeletonGan& m, const std::filesystem::path& path) {
    ParameterSet all;
    for (const ParameterSet* s : {&m.generator(), &m.discriminator(), &m.norms()})
        for (std::size_t i = 0; i < s->size(); ++i)
            all.add((s == &m.norms() ? "norm." : "") + s->name(i), (*s)[i]);
    ad::save_checkpoint(path, all);
    std::ofstream os(path.string() + ".json");
    if (!os) throw std::runtime_error("cannot write " + path.string() + ".json");
    nlohmann::json j = m.config().to_json();
    j["calibrated"] = m.calibrated();
    os << j.dump(2) << '\n';
}

inline SkeletonGan load_gan(const std::filesystem::path& path) {
    std::ifstream is(path.string() + ".json");
    if (!is) throw std::runtime_error("cannot read model config " + path.string() + ".json");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ".json: " + e.what());
    }
    if (j.value("model", "") != "skeleton-gan") throw std::runtime_error(path.string() + " is not a skeleton-gan model");
    SkeletonGan m(GanConfig::from_json(j), 0);
    const ParameterSet all = ad::load_checkpoint(path);
    for (ParameterSet* s : {&m.generator(), &m.discriminator(), &m.norms()})
        for (std::size_t i = 0; i < s->size(); ++i) {
            const std::string name = (s == &m.norms() ? "norm." : "") + s->name(i);
            if (!all.contains(name)) throw std::runtime_error(path.string() + ": missing tensor " + name);
            if (all[name].shape() != (*s)[i].shape())
                throw std::runtime_error(path.string() + ": tensor " + name + " has the wrong shape");
            (*s)[i] = all[name];
        }
    m.set_calibrated(j.value("calibrated", false));
    return m;
}

}  // namespace posef::gan

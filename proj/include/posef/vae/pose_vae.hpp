#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "posef/core/adam.hpp"
#include "posef/core/autodiff.hpp"
#include "posef/core/checkpoint.hpp"
#include "posef/core/parallel.hpp"
#include "posef/core/rng.hpp"
#include "posef/core/settings.hpp"
#include "posef/pose/pose.hpp"
#include "posef/vae/lstm.hpp"

namespace posef::vae {

using pose::kPoseDim;
using pose::Pose;

struct VaeConfig {
    std::size_t context_dim = 32;
    std::size_t embed = 16;
    std::size_t hidden = 64;
    std::size_t layers = 2;
    std::size_t enc_hidden = 64;
    std::size_t latent = 8;  // per future step
    std::size_t past_steps = 2;
    std::size_t future_steps = 5;
    double velocity_scale = 10.0;  // velocities enter and leave the network multiplied by this
    bool deterministic = false;    // ERD: latent path removed

    std::size_t latent_total() const { return latent * future_steps; }

    void validate() const {
        if (context_dim == 0 || embed == 0 || hidden == 0 || layers == 0 || enc_hidden == 0 || latent == 0)
            throw std::invalid_argument("vae: widths must be positive");
        if (past_steps < 1 || future_steps < 1) throw std::invalid_argument("vae: past/future steps must be >= 1");
        if (!(velocity_scale > 0)) throw std::invalid_argument("vae: velocity_scale must be positive");
    }

    nlohmann::json to_json() const {
        return {{"model", "pose-vae"},     {"context_dim", context_dim}, {"embed", embed},
                {"hidden", hidden},        {"layers", layers},           {"enc_hidden", enc_hidden},
                {"latent", latent},        {"past_steps", past_steps},   {"future_steps", future_steps},
                {"velocity_scale", velocity_scale}, {"deterministic", deterministic}};
    }

    static VaeConfig from_json(const nlohmann::json& j) {
        VaeConfig c;
        c.context_dim = j.at("context_dim").get<std::size_t>();
        c.embed = j.at("embed").get<std::size_t>();
        c.hidden = j.at("hidden").get<std::size_t>();
        c.layers = j.at("layers").get<std::size_t>();
        c.enc_hidden = j.at("enc_hidden").get<std::size_t>();
        c.latent = j.at("latent").get<std::size_t>();
        c.past_steps = j.at("past_steps").get<std::size_t>();
        c.future_steps = j.at("future_steps").get<std::size_t>();
        c.velocity_scale = j.at("velocity_scale").get<double>();
        c.deterministic = j.at("deterministic").get<bool>();
        c.validate();
        return c;
    }
};

// Two-phase KL weight. Iteration `it` (0-based) uses phase-2 weight from it == phase1 on.
struct KlSchedule {
    double lambda1 = 0.00025;
    std::size_t phase1 = 60000;
    double lambda2 = 0.0005;
    std::size_t phase2 = 20000;

    double at(std::size_t it) const { return it < phase1 ? lambda1 : lambda2; }
    std::size_t total() const { return phase1 + phase2; }

    void validate() const {
        if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw std::invalid_argument("kl schedule: lambda must be >= 0");
        if (phase1 == 0 || phase2 == 0) throw std::invalid_argument("kl schedule: iteration counts must be > 0");
    }

    // Keeps the phase ratio when the iteration total is overridden.
    KlSchedule scaled_to(std::size_t iterations) const {
        validate();
        if (iterations < 2) throw std::invalid_argument("kl schedule: need at least 2 iterations");
        KlSchedule s = *this;
        const double frac = static_cast<double>(phase1) / static_cast<double>(total());
        s.phase1 = static_cast<std::size_t>(std::llround(frac * static_cast<double>(iterations)));
        s.phase1 = std::clamp<std::size_t>(s.phase1, 1, iterations - 1);
        s.phase2 = iterations - s.phase1;
        return s;
    }
};

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    KlSchedule kl;
    std::size_t iterations = 0;  // 0: phase1 + phase2
    std::size_t batch_size = 32;
    double clip_norm = 0.0;
    std::uint64_t seed = 0;

    KlSchedule schedule() const { return iterations == 0 ? kl : kl.scaled_to(iterations); }
    std::size_t total_iterations() const { return schedule().total(); }

    void validate() const {
        kl.validate();
        if (!(learning_rate > 0)) throw std::invalid_argument("train: learning_rate must be positive");
        if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
        schedule();
    }
};

struct GaussianPosterior {
    Var mu;
    Var log_var;
};

struct Decoded {
    std::vector<Var> velocities;  // F steps, each [B x 36]
    std::vector<Var> poses;       // F + 1 poses starting at the anchor
};

// Minibatch with poses p_0..p_{t+F} per row: past p_0..p_{t-1} with
// velocities v_i = p_{i+1} - p_i, anchor p_t, future velocities v_t..v_{t+F-1}.
struct VaeBatch {
    Tensor context;
    std::vector<Tensor> past_poses;
    std::vector<Tensor> past_vels;
    Tensor anchor;
    std::vector<Tensor> future_vels;
    std::vector<Tensor> future_poses;  // p_{t+1}..p_{t+F}

    std::size_t rows() const { return anchor.rows(); }
};

inline Tensor stack_rows(const std::vector<const Pose*>& poses) {
    std::vector<double> v;
    v.reserve(poses.size() * kPoseDim);
    for (const Pose* p : poses) v.insert(v.end(), p->coords.begin(), p->coords.end());
    return Tensor({poses.size(), kPoseDim}, std::move(v));
}

inline Tensor stack_velocities(const std::vector<const Pose*>& to, const std::vector<const Pose*>& from) {
    std::vector<double> v;
    v.reserve(to.size() * kPoseDim);
    for (std::size_t r = 0; r < to.size(); ++r)
        for (std::size_t d = 0; d < kPoseDim; ++d) v.push_back((*to[r])[d] - (*from[r])[d]);
    return Tensor({to.size(), kPoseDim}, std::move(v));
}

inline Pose row_pose(const Tensor& t, std::size_t r) {
    Pose p;
    for (std::size_t d = 0; d < kPoseDim; ++d) p[d] = t.at(r, d);
    return p;
}

// Rows are the given sequences; only the first t+F+1 poses are used.
inline VaeBatch make_batch(const std::vector<const pose::PoseSequence*>& seqs, std::size_t t, std::size_t f,
                           std::size_t context_dim, bool with_future = true) {
    if (seqs.empty()) throw std::invalid_argument("make_batch: empty batch");
    const std::size_t need = with_future ? t + f + 1 : t + 1;
    std::vector<double> ctx;
    for (const auto* s : seqs) {
        if (s->size() < need)
            throw std::invalid_argument("make_batch: sequence has " + std::to_string(s->size()) + " poses, need " +
                                        std::to_string(need));
        if (s->context.size() != context_dim)
            throw std::invalid_argument("make_batch: context has " + std::to_string(s->context.size()) +
                                        " entries, model expects " + std::to_string(context_dim));
        ctx.insert(ctx.end(), s->context.begin(), s->context.end());
    }
    auto frame = [&](std::size_t j) {
        std::vector<const Pose*> out;
        for (const auto* s : seqs) out.push_back(&s->poses[j]);
        return out;
    };
    VaeBatch b;
    b.context = Tensor({seqs.size(), context_dim}, std::move(ctx));
    for (std::size_t i = 0; i < t; ++i) {
        b.past_poses.push_back(stack_rows(frame(i)));
        b.past_vels.push_back(stack_velocities(frame(i + 1), frame(i)));
    }
    b.anchor = stack_rows(frame(t));
    if (with_future)
        for (std::size_t k = 0; k < f; ++k) {
            b.future_vels.push_back(stack_velocities(frame(t + k + 1), frame(t + k)));
            b.future_poses.push_back(stack_rows(frame(t + k + 1)));
        }
    return b;
}

inline Var squared_error(const std::vector<Var>& pred, const std::vector<Var>& target) {
    if (pred.size() != target.size() || pred.empty())
        throw std::invalid_argument("squared_error: step count mismatch");
    Var total = ad::sum(ad::square(pred[0] - target[0]));
    for (std::size_t k = 1; k < pred.size(); ++k) total = total + ad::sum(ad::square(pred[k] - target[k]));
    return total;
}


// Summed 0.5 * (mu^2 + sigma^2 - 1 - ln sigma^2) against N(0, I).
inline Var kl_divergence(const GaussianPosterior& q) {
    if (q.mu.shape() != q.log_var.shape()) throw std::invalid_argument("kl_divergence: mu/log_var shape mismatch");
    Tape& tape = *q.mu.tape;
    Var terms = ad::square(q.mu) + ad::exp(q.log_var) - q.log_var;
    const double d = static_cast<double>(q.mu.value().size());
    return ad::scale(ad::sum(terms) - tape.constant(Tensor::scalar(d)), 0.5);
}

// z = mu + exp(log_var / 2) * noise.
inline Var reparameterize(const GaussianPosterior& q, Var noise) {
    if (noise.shape() != q.mu.shape())
        throw std::invalid_argument("reparameterize: noise " + shape_str(noise.shape()) + " vs posterior " +
                                    shape_str(q.mu.shape()));
    return q.mu + ad::exp(ad::scale(q.log_var, 0.5)) * noise;
}

// Squared error summed over steps and coordinates plus lambda * KL.
inline Var vae_loss(const std::vector<Var>& pred, const std::vector<Var>& target,
                    const std::optional<GaussianPosterior>& q, double lambda) {
    if (!(lambda >= 0)) throw std::invalid_argument("vae_loss: lambda must be >= 0");
    Var recon = squared_error(pred, target);
    if (!q) return recon;
    return recon + ad::scale(kl_divergence(*q), lambda);
}

class PoseVae {
   public:
    PoseVae() = default;

    PoseVae(const VaeConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
        cfg_.validate();
        Rng rng(seed, "vae/init");
        auto dense = [&](const std::string& name, std::size_t in, std::size_t out, double gain) {
            const double a = gain / std::sqrt(static_cast<double>(in));
            Tensor w = Tensor::zeros({in, out});
            for (double& v : w.values()) v = rng.uniform(-a, a);
            const std::size_t wid = params_.add(name + ".w", std::move(w));
            params_.add(name + ".b", Tensor::zeros({1, out}));
            return wid;
        };
        const std::size_t h = cfg_.hidden;
        embed_ = dense("embed", cfg_.context_dim, cfg_.embed, 1.0);
        past_enc_ = LstmParams::create(params_, "past_enc", cfg_.embed + 2 * kPoseDim, h, cfg_.layers, rng);
        past_dec_ = LstmParams::create(params_, "past_dec", kPoseDim, h, cfg_.layers, rng);
        past_head_ = dense("past_dec.head", h, kPoseDim, 0.1);
        if (!cfg_.deterministic) {
            enc_hidden_ = dense("fut_enc.hidden", cfg_.future_steps * kPoseDim + cfg_.layers * h, cfg_.enc_hidden, 1.0);
            enc_mu_ = dense("fut_enc.mu", cfg_.enc_hidden, cfg_.latent_total(), 0.1);
            enc_lv_ = dense("fut_enc.log_var", cfg_.enc_hidden, cfg_.latent_total(), 0.1);
        }
        fut_dec_ = LstmParams::create(params_, "fut_dec", cfg_.latent + kPoseDim, h, cfg_.layers, rng);
        fut_head_ = dense("fut_dec.head", h, kPoseDim, 0.1);
    }

    const VaeConfig& config() const { return cfg_; }
    ad::ParameterSet& params() { return params_; }
    const ad::ParameterSet& params() const { return params_; }

    Var linear(Tape& tape, std::size_t wid, Var x) const {
        return ad::add(ad::matmul(x, tape.param(params_, wid)), tape.param(params_, wid + 1));
    }

    Var embed(Tape& tape, Var context) const { return ad::tanh(linear(tape, embed_, context)); }

    // Feeds [embed(context), P_i, Y_i] for each past step.
    LstmState past_encode(Tape& tape, Var context, const std::vector<Var>& poses, const std::vector<Var>& vels) const {
        if (poses.size() != vels.size() || poses.empty())
            throw std::invalid_argument("past_encode: " + std::to_string(poses.size()) + " poses but " +
                                        std::to_string(vels.size()) + " velocities");
        Var e = embed(tape, context);
        LstmState s = lstm_zero_state(tape, past_enc_, context.rows());
        for (std::size_t i = 0; i < poses.size(); ++i)
            s = lstm_step(tape, params_, past_enc_, s, ad::concat({e, poses[i], vels[i] * cfg_.velocity_scale}, 1));
        return s;
    }

    // Emits `steps` velocity estimates, latest past step first.
    std::vector<Var> past_decode(Tape& tape, const LstmState& state, std::size_t steps) const {
        const std::size_t b = state.front().h.rows();
        LstmState s = state;
        Var in = tape.constant(Tensor::zeros({b, kPoseDim}));
        std::vector<Var> out;
        for (std::size_t k = 0; k < steps; ++k) {
            s = lstm_step(tape, params_, past_dec_, s, in);
            Var y = linear(tape, past_head_, s.back().h);
            out.push_back(y * (1.0 / cfg_.velocity_scale));
            in = y;
        }
        return out;
    }

    // Squared error to the past velocities in reverse order.
    Var past_decode_loss(Tape& tape, const LstmState& state, const std::vector<Var>& vels) const {
        auto pred = past_decode(tape, state, vels.size());
        std::vector<Var> reversed(vels.rbegin(), vels.rend());
        return squared_error(pred, reversed);
    }

    GaussianPosterior future_encode(Tape& tape, const std::vector<Var>& future_vels, const LstmState& state) const {
        if (cfg_.deterministic) throw std::logic_error("future_encode: deterministic model has no latent path");
        if (future_vels.size() != cfg_.future_steps)
            throw std::invalid_argument("future_encode: expected " + std::to_string(cfg_.future_steps) +
                                        " future steps, got " + std::to_string(future_vels.size()));
        std::vector<Var> parts;
        for (Var y : future_vels) parts.push_back(y * cfg_.velocity_scale);
        for (const auto& layer : state) parts.push_back(layer.h);
        Var hid = ad::relu(linear(tape, enc_hidden_, ad::concat(parts, 1)));
        return {linear(tape, enc_mu_, hid), linear(tape, enc_lv_, hid)};
    }

    // Step k consumes [z_k, P_k]. P_0 is `start`; later inputs are the
    // teacher poses when given (teacher[k-1] = ground truth after step k-1),
    // otherwise the integrated prediction.
    Decoded future_decode(Tape& tape, Var z, const LstmState& state, Var start,
                          const std::vector<Var>* teacher = nullptr) const {
        const std::size_t f = cfg_.future_steps;
        if (z.value().rank() != 2 || z.cols() % f != 0 || z.cols() / f != cfg_.latent)
            throw std::invalid_argument("future_decode: z of shape " + shape_str(z.shape()) + " does not split into " +
                                        std::to_string(f) + " steps of width " + std::to_string(cfg_.latent));
        if (teacher && teacher->size() < f - 1)
            throw std::invalid_argument("future_decode: teacher sequence too short");
        Decoded d;
        d.poses.push_back(start);
        LstmState s = state;
        Var p = start;
        for (std::size_t k = 0; k < f; ++k) {
            Var zk = ad::slice(z, 1, k * cfg_.latent, (k + 1) * cfg_.latent);
            s = lstm_step(tape, params_, fut_dec_, s, ad::concat({zk, p}, 1));
            Var y = linear(tape, fut_head_, s.back().h) * (1.0 / cfg_.velocity_scale);
            d.velocities.push_back(y);
            d.poses.push_back(d.poses.back() + y);
            if (k + 1 < f) p = teacher ? (*teacher)[k] : d.poses.back();
        }
        return d;
    }

   private:
    VaeConfig cfg_;
    ad::ParameterSet params_;
    std::size_t embed_ = 0, past_head_ = 0, enc_hidden_ = 0, enc_mu_ = 0, enc_lv_ = 0, fut_head_ = 0;
    LstmParams past_enc_, past_dec_, fut_dec_;
};

struct LossParts {
    Var total;
    Var recon;
    std::optional<Var> kl;
    Var past;
};

// Batch-averaged (recon + lambda * KL) plus past-decode loss, with teacher forcing.
inline LossParts training_loss(Tape& tape, const PoseVae& m, const VaeBatch& b, double lambda,
                               const Tensor* noise) {
    const auto& cfg = m.config();
    auto consts = [&](const std::vector<Tensor>& ts) {
        std::vector<Var> out;
        for (const auto& t : ts) out.push_back(tape.constant(t));
        return out;
    };
    Var ctx = tape.constant(b.context);
    auto past_p = consts(b.past_poses);
    auto past_v = consts(b.past_vels);
    auto fut_v = consts(b.future_vels);
    auto fut_p = consts(b.future_poses);
    Var anchor = tape.constant(b.anchor);
    LstmState state = m.past_encode(tape, ctx, past_p, past_v);
    Var past = m.past_decode_loss(tape, state, past_v);
    const double inv_b = 1.0 / static_cast<double>(b.rows());
    LossParts out;
    out.past = past;
    if (cfg.deterministic) {
        Var z = tape.constant(Tensor::zeros({b.rows(), cfg.latent_total()}));
        Decoded d = m.future_decode(tape, z, state, anchor, &fut_p);
        out.recon = squared_error(d.velocities, fut_v);
        out.total = ad::scale(out.recon + past, inv_b);
        return out;
    }
    if (!noise) throw std::invalid_argument("training_loss: stochastic model needs a noise draw");
    GaussianPosterior q = m.future_encode(tape, fut_v, state);
    Var z = reparameterize(q, tape.constant(*noise));
    Decoded d = m.future_decode(tape, z, state, anchor, &fut_p);
    out.recon = squared_error(d.velocities, fut_v);
    out.kl = kl_divergence(q);
    out.total = ad::scale(out.recon + ad::scale(*out.kl, lambda) + past, inv_b);
    return out;
}

struct TrainLogRow {
    std::size_t iteration = 0;
    double recon_loss = 0;  // per sequence
    double kl_loss = 0;
    double past_decode_loss = 0;
    double lambda = 0;
};

struct TrainResult {
    PoseVae model;
    std::vector<TrainLogRow> log;
    std::size_t skipped = 0;
};

inline TrainResult train_pose_vae(const std::vector<pose::PoseSequence>& data, const VaeConfig& cfg,
                                  const TrainConfig& tc) {
    tc.validate();
    const std::size_t need = cfg.past_steps + cfg.future_steps + 1;
    std::vector<const pose::PoseSequence*> usable;
    TrainResult res;
    for (const auto& s : data) {
        if (s.size() < need)
            ++res.skipped;
        else
            usable.push_back(&s);
    }
    if (usable.empty())
        throw std::invalid_argument("train_pose_vae: no sequence has the " + std::to_string(need) +
                                    " poses needed");
    res.model = PoseVae(cfg, tc.seed);
    PoseVae& m = res.model;
    ad::Adam adam(m.params(), {tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon, tc.clip_norm});
    const KlSchedule sched = tc.schedule();
    Rng batch_rng(tc.seed, "vae/batch");
    Rng noise_rng(tc.seed, "vae/noise");
    std::vector<const pose::PoseSequence*> rows(tc.batch_size);
    for (std::size_t it = 0; it < sched.total(); ++it) {
        for (auto& r : rows) r = usable[batch_rng.index(usable.size())];
        VaeBatch b = make_batch(rows, cfg.past_steps, cfg.future_steps, cfg.context_dim);
        std::optional<Tensor> noise;
        if (!cfg.deterministic)
            noise = Tensor({b.rows(), cfg.latent_total()}, noise_rng.normals(b.rows() * cfg.latent_total()));
        const double lambda = cfg.deterministic ? 0.0 : sched.at(it);
        Tape tape;
        LossParts loss = training_loss(tape, m, b, lambda, noise ? &*noise : nullptr);
        auto grads = tape.backward(loss.total).params(m.params());
        adam.step(m.params(), std::move(grads));
        const double inv_b = 1.0 / static_cast<double>(b.rows());
        res.log.push_back({it, loss.recon.value().item() * inv_b, loss.kl ? loss.kl->value().item() * inv_b : 0.0,
                           loss.past.value().item() * inv_b, lambda});
    }
    return res;
}

// Observed part of a clip: poses p_0..p_t and the context feature.
struct PastClip {
    pose::ContextFeature context;
    std::vector<Pose> poses;
};

inline PastClip past_clip(const pose::PoseSequence& s, std::size_t past_steps) {
    if (s.size() < past_steps + 1) throw std::invalid_argument("past_clip: sequence too short");
    return {s.context, std::vector<Pose>(s.poses.begin(), s.poses.begin() + static_cast<std::ptrdiff_t>(past_steps + 1))};
}

struct FutureSample {
    std::vector<double> z;
    pose::VelocitySequence velocities;
    pose::PoseSequence poses;  // compose_poses(anchor, velocities)
};

inline constexpr std::size_t kSampleChunk = 64;

// n draws per clip. Sample j of clip e uses its own noise stream, so
// results do not depend on chunking or worker count.
inline std::vector<std::vector<FutureSample>> sample_futures(const PoseVae& m, const std::vector<PastClip>& clips,
                                                             std::size_t n, std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_futures: n must be >= 1");
    const auto& cfg = m.config();
    for (const auto& c : clips)
        if (c.poses.size() != cfg.past_steps + 1)
            throw std::invalid_argument("sample_futures: clip has " + std::to_string(c.poses.size()) +
                                        " poses, model expects " + std::to_string(cfg.past_steps + 1));
    std::vector<std::vector<FutureSample>> out(clips.size(), std::vector<FutureSample>(n));
    const std::size_t total = clips.size() * n;
    const std::size_t chunks = (total + kSampleChunk - 1) / kSampleChunk;
    const std::size_t lt = cfg.latent_total();
    parallel_for(chunks, [&](std::size_t ci) {
        const std::size_t lo = ci * kSampleChunk, hi = std::min(total, lo + kSampleChunk);
        std::vector<pose::PoseSequence> seqs;
        std::vector<double> zs;
        for (std::size_t g = lo; g < hi; ++g) {
            const std::size_t e = g / n, j = g % n;
            seqs.push_back({clips[e].poses, clips[e].context});
            if (cfg.deterministic) {
                zs.insert(zs.end(), lt, 0.0);
            } else {
                Rng r(stream_seed(seed, "vae/sample", e), "z", j);
                auto draw = r.normals(lt);
                zs.insert(zs.end(), draw.begin(), draw.end());
            }
        }
        std::vector<const pose::PoseSequence*> ptrs;
        for (const auto& s : seqs) ptrs.push_back(&s);
        VaeBatch b = make_batch(ptrs, cfg.past_steps, cfg.future_steps, cfg.context_dim, false);
        Tape tape;
        std::vector<Var> pp, pv;
        for (const auto& t : b.past_poses) pp.push_back(tape.constant(t));
        for (const auto& t : b.past_vels) pv.push_back(tape.constant(t));
        LstmState state = m.past_encode(tape, tape.constant(b.context), pp, pv);
        Var z = tape.constant(Tensor({hi - lo, lt}, zs));
        Decoded d = m.future_decode(tape, z, state, tape.constant(b.anchor));
        for (std::size_t r = 0; r < hi - lo; ++r) {
            const std::size_t g = lo + r;
            FutureSample& fs = out[g / n][g % n];
            fs.z.assign(zs.begin() + static_cast<std::ptrdiff_t>(r * lt),
                        zs.begin() + static_cast<std::ptrdiff_t>((r + 1) * lt));
            // Reported velocities are the increments of the integrated track,
            // so differencing and re-integrating both reproduce it bitwise.
            for (Var p : d.poses) fs.poses.poses.push_back(row_pose(p.value(), r));
            for (std::size_t k = 0; k + 1 < fs.poses.size(); ++k)
                fs.velocities.velocities.push_back(fs.poses.poses[k + 1] - fs.poses.poses[k]);
            fs.poses.context = clips[g / n].context;
        }
    });
    return out;
}

inline std::vector<FutureSample> sample_futures(const PoseVae& m, const PastClip& clip, std::size_t n,
                                                std::uint64_t seed) {
    return std::move(sample_futures(m, std::vector<PastClip>{clip}, n, seed).front());
}

// Checkpoint plus a JSON sidecar (`<path>.json`) holding the configuration.
inline void save_vae(const PoseVae& m, const std::string& path) {
    ad::save_checkpoint(path, m.params());
    std::ofstream os(path + ".json");
    if (!os) throw std::runtime_error("cannot write " + path + ".json");
    os << m.config().to_json().dump(2) << '\n';
}

inline PoseVae load_vae(const std::string& path) {
    std::ifstream is(path + ".json");
    if (!is) throw std::runtime_error("cannot read model sidecar " + path + ".json");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad model sidecar " + path + ".json: " + e.what());
    }
    if (j.value("model", std::string()) != "pose-vae") throw std::runtime_error(path + " is not a pose-vae model");
    PoseVae m(VaeConfig::from_json(j), 0);
    ad::assign_parameters(m.params(), ad::load_checkpoint(path));
    return m;
}

inline void write_training_log(const std::vector<TrainLogRow>& log, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "iteration,recon_loss,kl_loss,past_decode_loss,lambda\n";
    char buf[160];
    for (const auto& r : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.recon_loss, r.kl_loss,
                      r.past_decode_loss, r.lambda);
        os << buf;
    }
}

}  // namespace posef::vae

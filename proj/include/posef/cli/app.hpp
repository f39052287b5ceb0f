#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "posef/cli/manifest.hpp"
#include "posef/cli/plot.hpp"
#include "posef/core/settings.hpp"
#include "posef/eval/protocols.hpp"
#include "posef/gan/raster.hpp"
#include "posef/gan/skeleton_gan.hpp"
#include "posef/gan/video.hpp"
#include "posef/pose/dataset_io.hpp"
#include "posef/pose/synth.hpp"
#include "posef/vae/kmeans.hpp"
#include "posef/vae/pose_vae.hpp"

namespace posef::cli {

namespace fs = std::filesystem;

inline constexpr std::size_t kDeskVaeIterations = 3000;
inline constexpr std::size_t kDeskGanIterations = 2000;

// Bad flags, settings or values. Exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out;
    std::vector<std::string> sets;
    std::string model;
    std::string dataset;
    std::size_t n_samples = 100;
    int k_clusters = 0;
    bool deterministic = false;
    std::string preset = "desk";
    std::vector<std::string> inputs;
};

template <class F>
auto as_usage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

// Config file first, then --set overrides, then --seed.
inline Settings gather_settings(const Options& o, std::set<std::string> allowed) {
    Settings s;
    if (!o.config.empty()) {
        if (!fs::exists(o.config)) throw std::runtime_error("config file not found: " + o.config);
        s = as_usage([&] { return Settings::load(o.config); });
    }
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + kv + "'");
        s.merge(as_usage([&] { return Settings::parse(kv, "--set"); }));
    }
    allowed.insert("seed");
    as_usage([&] { s.require_known(allowed); });
    if (o.seed_given) s.set("seed", std::to_string(o.seed));
    return s;
}

inline std::uint64_t seed_of(const Settings& s) {
    return as_usage([&] { return s.get_u64("seed", 0); });
}

inline RunRecord record_for(const std::string& command, const Settings& s) {
    RunRecord r;
    r.command = command;
    r.seed = seed_of(s);
    r.settings = s;
    return r;
}

inline void finish(RunRecord& r, const std::string& out_path) { write_manifest(r, out_path); }

inline std::vector<pose::PoseSequence> sequences_of(const pose::DatasetManifest& m) {
    std::vector<pose::PoseSequence> out;
    out.reserve(m.size());
    for (const auto& s : m.sequences) out.push_back(s.sequence);
    return out;
}

inline pose::PoseSequence tail_from(const pose::PoseSequence& s, std::size_t start) {
    if (start >= s.size())
        throw std::runtime_error("start=" + std::to_string(start) + " beyond a sequence of " +
                                 std::to_string(s.size()) + " poses");
    pose::PoseSequence t;
    t.context = s.context;
    t.poses.assign(s.poses.begin() + static_cast<std::ptrdiff_t>(start), s.poses.end());
    return t;
}

// ---- synth ------------------------------------------------------------------

inline int cmd_synth(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, pose::SynthConfig::keys());
    const pose::SynthConfig cfg = as_usage([&] { return pose::SynthConfig::from_settings(s); });
    const pose::DatasetManifest m = pose::synth_generate(cfg);
    pose::save_dataset(m, o.out);
    RunRecord r = record_for("synth", s);
    r.outputs = {o.out};
    finish(r, o.out);
    out << "wrote " << m.size() << " sequences to " << o.out << '\n';
    return 0;
}

// ---- train-vae -----------------------------------------------------------

inline const std::set<std::string>& vae_keys() {
    static const std::set<std::string> k{"embed",        "hidden",       "layers",     "enc_hidden",  "latent",
                                         "past_steps",   "future_steps", "velocity_scale", "iterations", "batch_size",
                                         "learning_rate", "beta1",       "beta2",      "epsilon",     "lambda1",
                                         "lambda2",      "phase1",       "phase2",     "clip_norm"};
    return k;
}

inline std::pair<vae::VaeConfig, vae::TrainConfig> vae_configs(const Settings& s, bool deterministic) {
    return as_usage([&] {
        vae::VaeConfig c;
        c.embed = s.get_u64("embed", c.embed);
        c.hidden = s.get_u64("hidden", c.hidden);
        c.layers = s.get_u64("layers", c.layers);
        c.enc_hidden = s.get_u64("enc_hidden", c.enc_hidden);
        c.latent = s.get_u64("latent", c.latent);
        c.past_steps = s.get_u64("past_steps", c.past_steps);
        c.future_steps = s.get_u64("future_steps", c.future_steps);
        c.velocity_scale = s.get_double("velocity_scale", c.velocity_scale);
        c.deterministic = deterministic;
        vae::TrainConfig t;
        t.iterations = s.get_u64("iterations", kDeskVaeIterations);
        t.batch_size = s.get_u64("batch_size", t.batch_size);
        t.learning_rate = s.get_double("learning_rate", t.learning_rate);
        t.beta1 = s.get_double("beta1", t.beta1);
        t.beta2 = s.get_double("beta2", t.beta2);
        t.epsilon = s.get_double("epsilon", t.epsilon);
        t.kl.lambda1 = s.get_double("lambda1", t.kl.lambda1);
        t.kl.lambda2 = s.get_double("lambda2", t.kl.lambda2);
        t.kl.phase1 = s.get_u64("phase1", t.kl.phase1);
        t.kl.phase2 = s.get_u64("phase2", t.kl.phase2);
        t.clip_norm = s.get_double("clip_norm", t.clip_norm);
        t.seed = s.get_u64("seed", 0);
        c.validate();
        t.validate();
        return std::pair{c, t};
    });
}

inline int cmd_train_vae(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, vae_keys());
    auto [vc, tc] = vae_configs(s, o.deterministic);
    const pose::DatasetManifest data = pose::load_dataset(o.dataset);
    if (data.sequences.empty()) throw std::runtime_error("dataset " + o.dataset + " is empty");
    vc.context_dim = data.sequences.front().sequence.context.size();
    for (const auto& q : data.sequences)
        if (q.sequence.context.size() != vc.context_dim)
            throw std::runtime_error("dataset mixes context widths " + std::to_string(vc.context_dim) + " and " +
                                     std::to_string(q.sequence.context.size()));
    const vae::TrainResult res = vae::train_pose_vae(sequences_of(data), vc, tc);
    vae::save_vae(res.model, o.out);
    const std::string log = o.out + ".log.csv";
    vae::write_training_log(res.log, log);
    RunRecord r = record_for("train-vae", s);
    r.flags = {{"dataset", o.dataset}, {"deterministic", o.deterministic}};
    r.inputs = {o.dataset};
    r.outputs = {o.out, o.out + ".json", log};
    finish(r, o.out);
    const auto& last = res.log.back();
    char buf[160];
    std::snprintf(buf, sizeof buf, "trained %zu iterations, final recon %.6g kl %.6g past %.6g\n", res.log.size(),
                  last.recon_loss, last.kl_loss, last.past_decode_loss);
    out << buf;
    if (res.skipped) out << "skipped " << res.skipped << " short sequences\n";
    return 0;
}

// ---- sample ----------------------------------------------------------------

inline int cmd_sample(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, {"clips", "first"});
    const std::uint64_t seed = seed_of(s);
    const std::size_t clips = as_usage([&] { return s.get_u64("clips", 1); });
    const std::size_t first = as_usage([&] { return s.get_u64("first", 0); });
    if (o.n_samples == 0) throw UsageError("--n-samples must be positive");
    if (o.k_clusters < 0) throw UsageError("--k-clusters must be >= 0");
    if (o.k_clusters > 0 && static_cast<std::size_t>(o.k_clusters) > o.n_samples)
        throw UsageError("--k-clusters exceeds --n-samples");
    const vae::PoseVae m = vae::load_vae(o.model);
    const pose::DatasetManifest data = pose::load_dataset(o.dataset);
    if (first + clips > data.size())
        throw std::runtime_error("dataset has " + std::to_string(data.size()) + " sequences, clips " +
                                 std::to_string(first) + ".." + std::to_string(first + clips - 1) + " requested");
    const std::size_t t = m.config().past_steps;
    std::vector<vae::PastClip> past;
    for (std::size_t i = first; i < first + clips; ++i) past.push_back(vae::past_clip(data.sequences[i].sequence, t));
    const auto samples = vae::sample_futures(m, past, o.n_samples, seed);

    // Observed poses followed by each sampled future.
    auto joined = [&](std::size_t e, const pose::PoseSequence& future) {
        pose::LabeledSequence q;
        q.label = data.sequences[first + e].label;
        q.sequence.context = past[e].context;
        q.sequence.poses = past[e].poses;
        q.sequence.poses.insert(q.sequence.poses.end(), future.poses.begin() + 1, future.poses.end());
        return q;
    };
    pose::DatasetManifest outm;
    outm.split = "samples";
    outm.seed = seed;
    outm.num_classes = data.num_classes;
    for (std::size_t e = 0; e < samples.size(); ++e)
        for (const auto& fs : samples[e]) outm.sequences.push_back(joined(e, fs.poses));
    pose::save_dataset(outm, o.out);

    RunRecord r = record_for("sample", s);
    r.flags = {{"model", o.model}, {"dataset", o.dataset}, {"n_samples", o.n_samples}, {"k_clusters", o.k_clusters}};
    r.add_model_input(o.model);
    r.inputs.push_back(o.dataset);
    r.outputs = {o.out};
    out << "wrote " << outm.size() << " sampled sequences to " << o.out << '\n';

    if (o.k_clusters > 0) {
        nlohmann::json report = {{"k", o.k_clusters}, {"n_samples", o.n_samples}, {"clips", nlohmann::json::array()}};
        pose::DatasetManifest modes;
        modes.split = "modes";
        modes.seed = seed;
        modes.num_classes = data.num_classes;
        for (std::size_t e = 0; e < samples.size(); ++e) {
            const auto clusters = vae::cluster_modes(samples[e], o.k_clusters, seed);
            nlohmann::json sizes = nlohmann::json::array();
            for (const auto& c : clusters) {
                sizes.push_back(c.size());
                pose::VelocitySequence v;
                for (std::size_t f = 0; f * pose::kPoseDim < c.centroid.size(); ++f) {
                    pose::Velocity y;
                    for (std::size_t d = 0; d < pose::kPoseDim; ++d) y[d] = c.centroid[f * pose::kPoseDim + d];
                    v.velocities.push_back(y);
                }
                modes.sequences.push_back(joined(e, pose::compose_poses(past[e].poses.back(), v)));
            }
            const double frac = static_cast<double>(clusters.front().size()) / static_cast<double>(o.n_samples);
            report["clips"].push_back({{"clip", first + e},
                                       {"cluster_sizes", sizes},
                                       {"largest_cluster_size", clusters.front().size()},
                                       {"largest_cluster_fraction", frac}});
            out << "clip " << first + e << ": largest cluster " << clusters.front().size() << "/" << o.n_samples
                << '\n';
        }
        const std::string rp = o.out + ".modes.json", mp = o.out + ".modes.jsonl";
        std::ofstream os(rp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + rp);
        os << report.dump(2) << '\n';
        os.close();
        pose::save_dataset(modes, mp);
        r.outputs.push_back(rp);
        r.outputs.push_back(mp);
    }
    finish(r, o.out);
    return 0;
}

// ---- eval-pose -------------------------------------------------------------

inline int cmd_eval_pose(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, {"gaussianize"});
    const std::uint64_t seed = seed_of(s);
    const bool gaussianize = as_usage([&] { return s.get_bool("gaussianize", false); });
    if (o.n_samples == 0) throw UsageError("--n-samples must be positive");
    std::vector<std::size_t> grid;
    for (std::size_t n : eval::default_n_grid())
        if (n < o.n_samples) grid.push_back(n);
    grid.push_back(o.n_samples);
    const vae::PoseVae m = vae::load_vae(o.model);
    const pose::DatasetManifest data = pose::load_dataset(o.dataset);
    const eval::ErrorCurve c = eval::evaluate_pose_model(m, sequences_of(data), grid, seed, gaussianize);
    c.save_csv(o.out);
    RunRecord r = record_for("eval-pose", s);
    r.flags = {{"model", o.model}, {"dataset", o.dataset}, {"n_samples", o.n_samples}};
    r.add_model_input(o.model);
    r.inputs.push_back(o.dataset);
    r.outputs = {o.out};
    finish(r, o.out);
    c.write_csv(out);
    return 0;
}

// ---- render -----------------------------------------------------------------

inline int cmd_render(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, {"style", "frames", "height", "width", "start", "pgm"});
    const std::uint64_t seed = seed_of(s);
    gan::VideoShape shape;
    std::string style;
    std::size_t start = 0, pgm = 0;
    as_usage([&] {
        shape.frames = s.get_u64("frames", shape.frames);
        shape.height = s.get_u64("height", shape.height);
        shape.width = s.get_u64("width", shape.width);
        start = s.get_u64("start", 2);
        pgm = s.get_u64("pgm", 1);
        style = s.get("style", "skeleton");
        if (style != "skeleton" && style != "appearance")
            throw std::invalid_argument("style must be skeleton or appearance, got '" + style + "'");
        if (shape.height < 8 || shape.width < 8 || shape.frames == 0)
            throw std::invalid_argument("video must be at least 1 frame of 8x8");
    });
    const pose::DatasetManifest data = pose::load_dataset(o.dataset);
    std::vector<gan::Video> videos;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const pose::PoseSequence t = tail_from(data.sequences[i].sequence, start);
        videos.push_back(style == "skeleton" ? gan::render_skeleton(t, shape.height, shape.width, shape.frames)
                                             : gan::render_appearance(t, gan::Appearance::random(seed, i), shape));
    }
    gan::save_videos(o.out, videos);
    RunRecord r = record_for("render", s);
    r.flags = {{"dataset", o.dataset}};
    r.inputs = {o.dataset};
    r.outputs = {o.out};
    for (std::size_t i = 0; i < std::min(pgm, videos.size()); ++i)
        for (auto& p : gan::dump_pgm_frames(o.out + ".v" + std::to_string(i), videos[i])) r.outputs.push_back(p);
    finish(r, o.out);
    out << "wrote " << videos.size() << " " << shape.str() << " videos to " << o.out << '\n';
    return 0;
}

// ---- train-gan ----------------------------------------------------------

inline std::vector<gan::GanTriple> triples_of(const pose::DatasetManifest& data, std::size_t start, std::size_t limit,
                                              std::uint64_t seed, gan::VideoShape shape) {
    const std::size_t n = limit == 0 ? data.size() : std::min(limit, data.size());
    std::vector<gan::GanTriple> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(gan::make_triple(tail_from(data.sequences[i].sequence, start), 0, gan::Appearance::random(seed, i),
                                       shape));
    return out;
}

inline int cmd_train_gan(const Options& o, std::ostream& out) {
    std::set<std::string> keys = gan::GanConfig::keys();
    keys.insert({"iterations", "start", "triples"});
    const Settings s = gather_settings(o, keys);
    const std::uint64_t seed = seed_of(s);
    if (o.preset != "desk" && o.preset != "full") throw UsageError("--preset must be desk or full");
    std::size_t iterations = 0, start = 0, limit = 0;
    const gan::GanConfig cfg = as_usage([&] {
        Settings net;
        for (const auto& [k, v] : s.entries())
            if (gan::GanConfig::keys().count(k)) net.set(k, v);
        iterations = s.get_u64("iterations", kDeskGanIterations);
        start = s.get_u64("start", 2);
        limit = s.get_u64("triples", 0);
        return gan::GanConfig::from_settings(net, o.preset == "full" ? gan::GanConfig::full() : gan::GanConfig::desk());
    });
    const pose::DatasetManifest data = pose::load_dataset(o.dataset);
    const auto triples = triples_of(data, start, limit, seed, cfg.video);
    const gan::GanTrainResult res = gan::train_gan(triples, cfg, iterations);
    gan::save_gan(res.model, o.out);
    const std::string log = o.out + ".log.csv";
    {
        std::ofstream os(log, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + log);
        os << "iteration,d_loss,g_loss,l1\n";
        char buf[128];
        for (const auto& row : res.log) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", row.iteration, row.d_loss, row.g_loss, row.l1);
            os << buf;
        }
    }
    RunRecord r = record_for("train-gan", s);
    r.flags = {{"dataset", o.dataset}, {"preset", o.preset}};
    r.inputs = {o.dataset};
    r.outputs = {o.out, o.out + ".json", log};
    finish(r, o.out);
    out << "trained " << iterations << " steps on " << triples.size() << " triples";
    if (!res.log.empty()) {
        char buf[96];
        std::snprintf(buf, sizeof buf, ", final l1 %.6g", res.log.back().l1);
        out << buf;
    }
    out << '\n';
    return 0;
}

// ---- eval-video ----------------------------------------------------------

inline int cmd_eval_video(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, {"start", "resamples", "bandwidths", "classifier_hidden", "classifier_embed",
                                           "classifier_iterations", "classifier_batch_size",
                                           "classifier_learning_rate"});
    eval::VideoEvalConfig cfg;
    std::size_t start = 0;
    as_usage([&] {
        cfg.seed = s.get_u64("seed", 0);
        cfg.classifier.seed = cfg.seed;
        cfg.resamples = s.get_u64("resamples", cfg.resamples);
        cfg.bandwidths = s.get_doubles("bandwidths", cfg.bandwidths);
        cfg.classifier.hidden = s.get_u64("classifier_hidden", cfg.classifier.hidden);
        cfg.classifier.embed = s.get_u64("classifier_embed", cfg.classifier.embed);
        cfg.classifier.iterations = s.get_u64("classifier_iterations", cfg.classifier.iterations);
        cfg.classifier.batch_size = s.get_u64("classifier_batch_size", cfg.classifier.batch_size);
        cfg.classifier.learning_rate = s.get_double("classifier_learning_rate", cfg.classifier.learning_rate);
        start = s.get_u64("start", 2);
        if (cfg.resamples < 2) throw std::invalid_argument("resamples must be >= 2");
        if (cfg.bandwidths.empty()) throw std::invalid_argument("bandwidths must not be empty");
    });
    const gan::SkeletonGan model = gan::load_gan(o.model);
    const pose::DatasetManifest data = pose::load_dataset(o.dataset);
    std::vector<int> labels;
    int classes = data.num_classes;
    for (const auto& q : data.sequences) {
        if (!q.label) throw std::runtime_error("eval-video needs a class label on every sequence");
        labels.push_back(*q.label);
        classes = std::max(classes, *q.label + 1);
    }
    const auto triples = triples_of(data, start, 0, cfg.seed, model.config().video);
    std::vector<gan::Video> real, generated;
    for (const auto& t : triples) {
        real.push_back(t.target);
        generated.push_back(model.generate(t.condition()));
    }
    const eval::VideoEvalResult res =
        eval::evaluate_videos(generated, real, labels, static_cast<std::size_t>(classes), cfg);
    nlohmann::json report = res.to_json();
    report["eval_config"] = cfg.to_json();
    {
        std::ofstream os(o.out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + o.out);
        os << report.dump(2) << '\n';
    }
    const std::string vids = o.out + ".videos.pfvid";
    gan::save_videos(vids, generated);
    RunRecord r = record_for("eval-video", s);
    r.flags = {{"model", o.model}, {"dataset", o.dataset}};
    r.add_model_input(o.model);
    r.inputs.push_back(o.dataset);
    r.outputs = {o.out, vids};
    finish(r, o.out);
    char buf[200];
    std::snprintf(buf, sizeof buf, "inception %.6g (var %.3g), mmd2 %.6g (var %.3g)\n", res.inception.value,
                  res.inception.variance, res.mmd.value, res.mmd.variance);
    out << buf;
    return 0;
}

// ---- plot ------------------------------------------------------------------

inline int cmd_plot(const Options& o, std::ostream& out) {
    const Settings s = gather_settings(o, {"labels"});
    std::vector<std::string> labels;
    if (s.has("labels")) {
        std::stringstream ss(s.get("labels", ""));
        std::string item;
        while (std::getline(ss, item, ',')) labels.push_back(item);
        if (labels.size() != o.inputs.size())
            throw UsageError("labels has " + std::to_string(labels.size()) + " entries for " +
                             std::to_string(o.inputs.size()) + " inputs");
    } else {
        for (const auto& p : o.inputs) labels.push_back(fs::path(p).stem().string());
    }
    std::vector<eval::ErrorCurve> curves;
    for (const auto& p : o.inputs) curves.push_back(load_error_curve(p));
    const std::string svg = error_curves_svg(curves, labels);
    {
        std::ofstream os(o.out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + o.out);
        os << svg;
    }
    RunRecord r = record_for("plot", s);
    r.inputs.assign(o.inputs.begin(), o.inputs.end());
    r.outputs = {o.out};
    finish(r, o.out);
    out << "wrote " << o.out << '\n';
    return 0;
}

// ---- dispatch ------------------------------------------------------------------

// Exit codes: 0 success, 1 usage error, 2 runtime failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Pose forecasting and pose-conditioned video generation", "posef"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* c) {
        c->add_option("--config", o.config, "key=value settings file");
        c->add_option("--seed", o.seed, "global seed")->each([&](const std::string&) { o.seed_given = true; });
        c->add_option("--out", o.out, "output path")->required();
        c->add_option("--set", o.sets, "key=value override (repeatable)");
    };
    auto dataset = [&](CLI::App* c) { c->add_option("--dataset", o.dataset, "pose dataset (JSONL)")->required(); };
    auto model = [&](CLI::App* c) { c->add_option("--model", o.model, "model checkpoint")->required(); };

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic branching-gait dataset");
    common(synth);
    CLI::App* train_vae = app.add_subcommand("train-vae", "train the pose VAE (or ERD with --deterministic)");
    common(train_vae);
    dataset(train_vae);
    train_vae->add_flag("--deterministic", o.deterministic, "drop the latent path (ERD baseline)");
    CLI::App* train_gan = app.add_subcommand("train-gan", "train the skeleton-conditioned video GAN");
    common(train_gan);
    dataset(train_gan);
    train_gan->add_option("--preset", o.preset, "network preset")->check(CLI::IsMember({"desk", "full"}));
    CLI::App* sample = app.add_subcommand("sample", "sample future pose sequences");
    common(sample);
    model(sample);
    dataset(sample);
    sample->add_option("--n-samples", o.n_samples, "samples per clip");
    sample->add_option("--k-clusters", o.k_clusters, "cluster samples into K modes");
    CLI::App* eval_pose = app.add_subcommand("eval-pose", "min-over-N error curve on a test set");
    common(eval_pose);
    model(eval_pose);
    dataset(eval_pose);
    eval_pose->add_option("--n-samples", o.n_samples, "largest N");
    CLI::App* eval_video = app.add_subcommand("eval-video", "Inception score and MMD of generated videos");
    common(eval_video);
    model(eval_video);
    dataset(eval_video);
    CLI::App* render = app.add_subcommand("render", "rasterize pose sequences to videos");
    common(render);
    dataset(render);
    CLI::App* plot = app.add_subcommand("plot", "SVG chart of error-curve CSVs");
    common(plot);
    plot->add_option("inputs", o.inputs, "error curve CSV files")->required();

    if (argc > 1 && argv[1][0] != '-') {
        const auto subs = app.get_subcommands([](CLI::App*) { return true; });
        if (std::none_of(subs.begin(), subs.end(), [&](CLI::App* c) { return c->get_name() == argv[1]; })) {
            err << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
            return 1;
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(o, out);
        if (train_vae->parsed()) return cmd_train_vae(o, out);
        if (train_gan->parsed()) return cmd_train_gan(o, out);
        if (sample->parsed()) return cmd_sample(o, out);
        if (eval_pose->parsed()) return cmd_eval_pose(o, out);
        if (eval_video->parsed()) return cmd_eval_video(o, out);
        if (render->parsed()) return cmd_render(o, out);
        if (plot->parsed()) return cmd_plot(o, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    err << app.help();
    return 1;
}

}  // namespace posef::cli

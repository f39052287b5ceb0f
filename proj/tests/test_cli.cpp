#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "posef/cli/app.hpp"

namespace fs = std::filesystem;
using namespace posef;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result posef_run(std::vector<std::string> args) {
    args.insert(args.begin(), "posef");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return cli::read_file(p); }

void spit(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    os << text;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

class Cli : public ::testing::Test {
   protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("posef_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }

    // Small dataset plus a briefly trained VAE.
    void small_pipeline() {
        ASSERT_EQ(posef_run({"synth", "--seed", "3", "--out", at("d.jsonl"), "--set", "num_sequences=24"}).code, 0);
        ASSERT_EQ(posef_run({"train-vae", "--dataset", at("d.jsonl"), "--out", at("vae.ckpt"), "--set",
                             "iterations=20", "--set", "hidden=8", "--set", "enc_hidden=8"})
                      .code,
                  0);
    }

    fs::path dir;
};

}  // namespace

TEST(GitBlobSha1, MatchesKnownObjectIds) {
    EXPECT_EQ(cli::git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    EXPECT_EQ(cli::git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_F(Cli, NoArgumentsPrintsUsage) {
    const Result r = posef_run({});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(Cli, UnknownSubcommandIsUsageError) {
    const Result r = posef_run({"frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("frobnicate"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST_F(Cli, HelpExitsZero) {
    EXPECT_EQ(posef_run({"--help"}).code, 0);
    EXPECT_EQ(posef_run({"sample", "--help"}).code, 0);
}

TEST_F(Cli, FlagErrorsAreUsageErrors) {
    EXPECT_EQ(posef_run({"synth"}).code, 1);  // --out missing
    EXPECT_EQ(posef_run({"synth", "--out", at("d"), "--bogus"}).code, 1);
    EXPECT_EQ(posef_run({"synth", "--out", at("d"), "--seed", "-1"}).code, 1);
    EXPECT_EQ(posef_run({"train-gan", "--dataset", at("d"), "--out", at("g"), "--preset", "huge"}).code, 1);
    EXPECT_EQ(posef_run({"synth", "--out", at("d"), "--set", "novalue"}).code, 1);
}

TEST_F(Cli, UnknownSettingNamesTheKey) {
    const Result r = posef_run({"synth", "--out", at("d.jsonl"), "--set", "num_sequencez=4"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("num_sequencez"), std::string::npos);
    spit(at("c.cfg"), "# comment\nbranch_angel = 0.3\n");
    const Result c = posef_run({"synth", "--out", at("d.jsonl"), "--config", at("c.cfg")});
    EXPECT_EQ(c.code, 1);
    EXPECT_NE(c.err.find("branch_angel"), std::string::npos);
    EXPECT_FALSE(fs::exists(at("d.jsonl")));
}

TEST_F(Cli, BadSettingValueIsUsageError) {
    EXPECT_EQ(posef_run({"synth", "--out", at("d.jsonl"), "--set", "num_sequences=many"}).code, 1);
    EXPECT_EQ(posef_run({"synth", "--out", at("d.jsonl"), "--set", "branch_probs=0.5,0.6,0.1"}).code, 1);
}

TEST_F(Cli, RuntimeFailuresExitTwo) {
    EXPECT_EQ(posef_run({"synth", "--out", at("d.jsonl"), "--config", at("missing.cfg")}).code, 2);
    EXPECT_EQ(posef_run({"train-vae", "--dataset", at("missing.jsonl"), "--out", at("m")}).code, 2);
    EXPECT_EQ(posef_run({"synth", "--out", (dir / "no" / "such" / "dir.jsonl").string()}).code, 2);
}

TEST_F(Cli, FlagsOverrideConfigFile) {
    spit(at("c.cfg"), "num_sequences = 5\nseed = 11\n");
    ASSERT_EQ(posef_run({"synth", "--out", at("a.jsonl"), "--config", at("c.cfg")}).code, 0);
    EXPECT_EQ(pose::load_dataset(at("a.jsonl")).size(), 5u);
    EXPECT_EQ(pose::load_dataset(at("a.jsonl")).seed, 11u);
    ASSERT_EQ(posef_run({"synth", "--out", at("b.jsonl"), "--config", at("c.cfg"), "--set", "num_sequences=3",
                         "--seed", "12"})
                  .code,
              0);
    EXPECT_EQ(pose::load_dataset(at("b.jsonl")).size(), 3u);
    EXPECT_EQ(pose::load_dataset(at("b.jsonl")).seed, 12u);
}

TEST_F(Cli, SynthIsByteIdenticalForEqualSeeds) {
    for (const char* name : {"a.jsonl", "b.jsonl", "c.jsonl"})
        ASSERT_EQ(posef_run({"synth", "--seed", name[0] == 'c' ? "8" : "7", "--out", at(name), "--set",
                             "num_sequences=10"})
                      .code,
                  0);
    EXPECT_EQ(slurp(at("a.jsonl")), slurp(at("b.jsonl")));
    EXPECT_NE(slurp(at("a.jsonl")), slurp(at("c.jsonl")));
}

TEST_F(Cli, ManifestEchoesConfigSeedAndHashes) {
    small_pipeline();
    const auto j = nlohmann::json::parse(slurp(at("vae.ckpt.manifest.json")));
    EXPECT_EQ(j.at("command"), "train-vae");
    EXPECT_EQ(j.at("seed"), 0);
    EXPECT_EQ(j.at("config").at("iterations"), "20");
    EXPECT_EQ(j.at("inputs").at(0).at("sha1"), cli::git_blob_sha1(slurp(at("d.jsonl"))));
    EXPECT_EQ(j.at("outputs").size(), 3u);
    const auto s = nlohmann::json::parse(slurp(at("d.jsonl.manifest.json")));
    EXPECT_EQ(s.at("seed"), 3);
    EXPECT_EQ(s.at("config").at("seed"), "3");
}

TEST_F(Cli, SampleEvalPosePlotChain) {
    small_pipeline();
    const Result s = posef_run({"sample", "--model", at("vae.ckpt"), "--dataset", at("d.jsonl"), "--n-samples",
                                "40", "--k-clusters", "5", "--set", "clips=2", "--out", at("s.jsonl")});
    ASSERT_EQ(s.code, 0) << s.err;
    const auto samples = pose::load_dataset(at("s.jsonl"));
    EXPECT_EQ(samples.size(), 80u);
    EXPECT_EQ(samples.sequences.front().sequence.size(), 8u);
    const auto d = pose::load_dataset(at("d.jsonl"));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(samples.sequences[5].sequence.poses[i], d.sequences[0].sequence.poses[i]);
    const auto modes = nlohmann::json::parse(slurp(at("s.jsonl.modes.json")));
    ASSERT_EQ(modes.at("clips").size(), 2u);
    std::size_t total = 0;
    for (std::size_t c : modes.at("clips").at(0).at("cluster_sizes")) total += c;
    EXPECT_EQ(total, 40u);
    EXPECT_EQ(pose::load_dataset(at("s.jsonl.modes.jsonl")).size(), 10u);

    const Result e = posef_run({"eval-pose", "--model", at("vae.ckpt"), "--dataset", at("d.jsonl"), "--n-samples",
                                "20", "--out", at("curve.csv")});
    ASSERT_EQ(e.code, 0) << e.err;
    const std::string csv = slurp(at("curve.csv"));
    EXPECT_EQ(csv.rfind("n,mean_min_error\n", 0), 0u);
    const auto curve = cli::parse_error_curve(csv, "curve.csv");
    EXPECT_EQ(curve.n, (std::vector<std::size_t>{1, 2, 4, 8, 16, 20}));

    ASSERT_EQ(posef_run({"plot", at("curve.csv"), "--out", at("a.svg")}).code, 0);
    ASSERT_EQ(posef_run({"plot", at("curve.csv"), "--out", at("b.svg")}).code, 0);
    EXPECT_EQ(slurp(at("a.svg")), slurp(at("b.svg")));
    EXPECT_EQ(count(slurp(at("a.svg")), "<polyline"), 1u);
}

TEST_F(Cli, GaussianizedEvalNeedsDeterministicModel) {
    small_pipeline();
    EXPECT_EQ(posef_run({"eval-pose", "--model", at("vae.ckpt"), "--dataset", at("d.jsonl"), "--set",
                         "gaussianize=true", "--out", at("g.csv")})
                  .code,
              2);
    ASSERT_EQ(posef_run({"train-vae", "--deterministic", "--dataset", at("d.jsonl"), "--out", at("erd.ckpt"),
                         "--set", "iterations=10", "--set", "hidden=8"})
                  .code,
              0);
    ASSERT_EQ(posef_run({"eval-pose", "--model", at("erd.ckpt"), "--dataset", at("d.jsonl"), "--n-samples", "8",
                         "--out", at("flat.csv")})
                  .code,
              0);
    const auto flat = cli::load_error_curve(at("flat.csv"));
    for (double v : flat.mean_min_error) EXPECT_EQ(v, flat.mean_min_error.front());
    ASSERT_EQ(posef_run({"eval-pose", "--model", at("erd.ckpt"), "--dataset", at("d.jsonl"), "--n-samples", "8",
                         "--set", "gaussianize=true", "--out", at("g.csv")})
                  .code,
              0);
}

TEST_F(Cli, PlotSinglePointAndTwoCurves) {
    spit(at("one.csv"), "n,mean_min_error\n1,0.5\n");
    spit(at("two.csv"), "n,mean_min_error\n1,0.9\n2,0.7\n4,0.6\n");
    ASSERT_EQ(posef_run({"plot", at("one.csv"), "--out", at("one.svg")}).code, 0);
    const std::string one = slurp(at("one.svg"));
    EXPECT_EQ(count(one, "<circle"), 1u);
    ASSERT_EQ(posef_run({"plot", at("one.csv"), at("two.csv"), "--set", "labels=vae,erd", "--out", at("both.svg")})
                  .code,
              0);
    const std::string both = slurp(at("both.svg"));
    EXPECT_EQ(count(both, "<polyline"), 2u);
    EXPECT_NE(both.find(">vae<"), std::string::npos);
    EXPECT_NE(both.find("number of samples N"), std::string::npos);
    EXPECT_NE(both.find("mean min error"), std::string::npos);
}

TEST_F(Cli, PlotSchemaMismatchExitsTwo) {
    spit(at("bad1.csv"), "n,error\n1,0.5\n");
    spit(at("bad2.csv"), "n,mean_min_error\n1,0.5,3\n");
    spit(at("bad3.csv"), "n,mean_min_error\n0,0.5\n");
    spit(at("bad4.csv"), "n,mean_min_error\n");
    for (const char* f : {"bad1.csv", "bad2.csv", "bad3.csv", "bad4.csv"})
        EXPECT_EQ(posef_run({"plot", at(f), "--out", at("x.svg")}).code, 2) << f;
}

TEST_F(Cli, RenderWritesVideosAndFrames) {
    ASSERT_EQ(posef_run({"synth", "--out", at("d.jsonl"), "--set", "num_sequences=3"}).code, 0);
    ASSERT_EQ(posef_run({"render", "--dataset", at("d.jsonl"), "--out", at("v.pfvid"), "--set", "style=appearance"})
                  .code,
              0);
    const auto vs = gan::load_videos(at("v.pfvid"));
    ASSERT_EQ(vs.size(), 3u);
    EXPECT_EQ(vs[0].shape, (gan::VideoShape{8, 16, 20, 3}));
    EXPECT_TRUE(fs::exists(at("v.pfvid.v0_f07.pgm")));
    EXPECT_EQ(posef_run({"render", "--dataset", at("d.jsonl"), "--out", at("w.pfvid"), "--set", "style=oil"}).code,
              1);
    EXPECT_EQ(posef_run({"render", "--dataset", at("d.jsonl"), "--out", at("w.pfvid"), "--set", "start=8"}).code, 2);
}

TEST_F(Cli, GanTrainAndVideoEvaluation) {
    ASSERT_EQ(posef_run({"synth", "--out", at("d.jsonl"), "--set", "num_sequences=12"}).code, 0);
    const Result t = posef_run({"train-gan", "--dataset", at("d.jsonl"), "--out", at("gan.ckpt"), "--set",
                                "iterations=4", "--set", "base_channels=4"});
    ASSERT_EQ(t.code, 0) << t.err;
    EXPECT_EQ(gan::load_gan(at("gan.ckpt")).config().base_channels, 4u);
    const Result e = posef_run({"eval-video", "--model", at("gan.ckpt"), "--dataset", at("d.jsonl"), "--out",
                                at("r.json"), "--set", "resamples=20", "--set", "classifier_iterations=10"});
    ASSERT_EQ(e.code, 0) << e.err;
    const auto j = nlohmann::json::parse(slurp(at("r.json")));
    EXPECT_EQ(j.at("inception").at("metric"), "inception_score");
    EXPECT_EQ(j.at("mmd").at("metric"), "mmd2_unbiased");
    EXPECT_GE(j.at("mmd").at("variance").get<double>(), 0.0);
    EXPECT_EQ(gan::load_videos(at("r.json.videos.pfvid")).size(), 12u);
}

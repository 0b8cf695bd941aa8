// End-to-end tests that spawn the installed CLI binary (path injected by the
// build as SCTR_CLI_PATH) and inspect exit codes, streams, and artifacts.

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "sctr/io.hpp"
#include "sctr/synth.hpp"

using namespace sctr;
namespace fs = std::filesystem;

namespace {

struct RunOut {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

struct CliFixture : ::testing::Test {
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("sctr_cli_" + std::to_string(::getpid()) + "_" +
               std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    std::string path(const std::string& name) const { return (dir / name).string(); }

    RunOut run(const std::string& args) const {
        const std::string out_f = path("__stdout"), err_f = path("__stderr");
        const std::string cmd = std::string(SCTR_CLI_PATH) + " " + args + " >" + out_f +
                                " 2>" + err_f;
        const int rc = std::system(cmd.c_str());
        RunOut r;
        r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        r.out = slurp(out_f);
        r.err = slurp(err_f);
        return r;
    }
};

} // namespace

TEST_F(CliFixture, MaskIsByteDeterministic) {
    save_tensor(path("d.t"), make_quadrant_tensor(12, 2));
    auto a = run("mask --like " + path("d.t") + " --rate 0.15 --seed 7 --out " + path("a.t"));
    auto b = run("mask --like " + path("d.t") + " --rate 0.15 --seed 7 --out " + path("b.t"));
    ASSERT_EQ(a.exit_code, 0) << a.err;
    ASSERT_EQ(b.exit_code, 0) << b.err;
    EXPECT_EQ(slurp(path("a.t")), slurp(path("b.t")));
    ObservationMask m = load_mask(path("a.t"));
    EXPECT_EQ(m.count_observed(),
              static_cast<std::size_t>(std::llround(0.15 * 12 * 12 * 2)));
}

TEST_F(CliFixture, EvalIdenticalFilesPrintsInfAndOne) {
    save_tensor(path("d.t"), make_quadrant_tensor(12, 2));
    auto r = run("eval " + path("d.t") + " " + path("d.t"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out, "psnr=inf ssim=1.0\n");
    EXPECT_EQ(r.err, "");
}

TEST_F(CliFixture, GuideKeepsObservedEntries) {
    auto data = make_quadrant_tensor(12, 2);
    save_tensor(path("d.t"), data);
    ASSERT_EQ(run("mask --like " + path("d.t") + " --rate 0.5 --seed 3 --out " +
                  path("m.t")).exit_code, 0);
    auto r = run("guide --data " + path("d.t") + " --mask " + path("m.t") + " --out " +
                 path("g.t"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    TensorData g = load_tensor(path("g.t"));
    ObservationMask m = load_mask(path("m.t"));
    ASSERT_TRUE(g.data.same_shape(data));
    float worst = 0;
    for (std::size_t n = 0; n < data.size(); ++n)
        if (m.flags[n])
            worst = std::max(worst, std::abs(static_cast<float>(data.data[n]) -
                                             static_cast<float>(g.data.data[n])));
    EXPECT_EQ(worst, 0.0f);
}

TEST_F(CliFixture, SegmentWritesLabelMapAndBoundaryViz) {
    save_tensor(path("g.t"), make_quadrant_tensor(32, 2));
    auto r = run("segment --guide " + path("g.t") + " --k 8 --seed 0 --out " +
                 path("lab.png") + " --viz " + path("viz.png"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    LabelMap lm = load_label_map(path("lab.png"));
    EXPECT_EQ(lm.rows, 32);
    EXPECT_EQ(lm.cols, 32);
    EXPECT_GE(lm.num_labels, 4);
    EXPECT_LE(lm.num_labels, 16);
    TensorData viz = load_png8(path("viz.png"));
    EXPECT_EQ(viz.data.i3, 3);
    // at least one painted boundary pixel
    bool red = false;
    for (int i = 0; i < 32 && !red; ++i)
        for (int j = 0; j < 32 && !red; ++j)
            red = viz.data(i, j, 0) == 1.0 && viz.data(i, j, 1) == 0.0;
    EXPECT_TRUE(red);
}

TEST_F(CliFixture, TrainWritesEveryManifestArtifact) {
    save_tensor(path("d.t"), make_quadrant_tensor(16, 2));
    std::ofstream(path("cfg.json"))
        << R"({"iterations":5,"backbone_width":8,"residual_blocks":1,"k_target":4,)"
        << R"("sampling_rate":0.5,"guide_max_iters":40})";
    auto r = run("train --data " + path("d.t") + " --config " + path("cfg.json") +
                 " --out-dir " + path("run"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("psnr="), std::string::npos);
    json manifest = json::parse(slurp(path("run/manifest.json")));
    for (const auto& [key, value] : manifest["artifacts"].items())
        EXPECT_TRUE(fs::exists(value.get<std::string>())) << key;
    EXPECT_TRUE(fs::exists(manifest["inputs"]["mask"].get<std::string>()));
    EXPECT_EQ(manifest["config"]["iterations"], 5);
    EXPECT_GT(manifest["patch_count"].get<int>(), 0);
    EXPECT_GT(manifest["iteration_cost"].get<long long>(), 0);
    // loss curve has one row per iteration plus header
    const std::string curve = slurp(path("run/loss_curve.csv"));
    EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 6);
    // reconstruction round-trips through eval against itself
    auto ev = run("eval " + path("run/reconstruction.t") + " " + path("run/reconstruction.t"));
    EXPECT_EQ(ev.out, "psnr=inf ssim=1.0\n");
}

TEST_F(CliFixture, TrainRerunsAreByteIdentical) {
    save_tensor(path("d.t"), make_quadrant_tensor(16, 2));
    std::ofstream(path("cfg.json"))
        << R"({"iterations":4,"backbone_width":8,"residual_blocks":1,"k_target":4,)"
        << R"("sampling_rate":0.5,"guide_max_iters":30})";
    const std::string base = "train --data " + path("d.t") + " --config " + path("cfg.json");
    ASSERT_EQ(run(base + " --out-dir " + path("r1")).exit_code, 0);
    ASSERT_EQ(run(base + " --out-dir " + path("r2")).exit_code, 0);
    EXPECT_EQ(slurp(path("r1/reconstruction.t")), slurp(path("r2/reconstruction.t")));
    EXPECT_EQ(slurp(path("r1/loss_curve.csv")), slurp(path("r2/loss_curve.csv")));
    EXPECT_EQ(slurp(path("r1/checkpoint.ckpt")), slurp(path("r2/checkpoint.ckpt")));
}

TEST_F(CliFixture, SweepEmitsCsv) {
    save_tensor(path("d.t"), make_quadrant_tensor(16, 2));
    std::ofstream(path("cfg.json"))
        << R"({"iterations":3,"backbone_width":8,"residual_blocks":0,)"
        << R"("sampling_rate":0.5,"guide_max_iters":20})";
    auto r = run("sweep --data " + path("d.t") + " --config " + path("cfg.json") +
                 " --alphas 0");
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, 22), "alpha,n,psnr,ssim\n0,8,");
}

TEST_F(CliFixture, ReportMergesCsvFiles) {
    std::ofstream(path("a.csv")) << metric_csv_header() << "\n"
                                 << "synth,full,0.2,41.5,0.99\n";
    std::ofstream(path("b.csv")) << metric_csv_header() << "\n"
                                 << "synth,neither,0.2,22.0,0.6\n";
    auto r = run("report " + path("a.csv") + " " + path("b.csv"));
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("## synth"), std::string::npos);
    EXPECT_NE(r.out.find("| method | SR=0.2 PSNR | SR=0.2 SSIM |"), std::string::npos);
    EXPECT_NE(r.out.find("| full | 41.50 | 0.9900 |"), std::string::npos);
    EXPECT_NE(r.out.find("| neither | 22.00 | 0.6000 |"), std::string::npos);
}

TEST_F(CliFixture, ExitCodesAndSingleLineErrors) {
    // usage: no subcommand
    auto u = run("");
    EXPECT_EQ(u.exit_code, 1);
    EXPECT_EQ(u.err.substr(0, 6), "sctr: ");
    EXPECT_EQ(std::count(u.err.begin(), u.err.end(), '\n'), 1);

    // format: missing file
    auto f = run("eval nope.t nope.t");
    EXPECT_EQ(f.exit_code, 2);
    EXPECT_EQ(f.err.substr(0, 13), "sctr: format:");
    EXPECT_EQ(std::count(f.err.begin(), f.err.end(), '\n'), 1);

    // format: corrupt tensor file
    std::ofstream(path("bad.t"), std::ios::binary) << "garbage no newline";
    auto c = run("eval " + path("bad.t") + " " + path("bad.t"));
    EXPECT_EQ(c.exit_code, 2);

    // usage: out-of-range hyperparameter without force
    save_tensor(path("d.t"), make_quadrant_tensor(12, 2));
    std::ofstream(path("oor.json")) << R"({"iterations":2,"weight_decay":0.1,)"
                                    << R"("backbone_width":4,"residual_blocks":0,)"
                                    << R"("sampling_rate":0.5,"guide_max_iters":10})";
    const std::string t = "train --data " + path("d.t") + " --config " + path("oor.json") +
                          " --out-dir " + path("oor");
    auto no_force = run(t);
    EXPECT_EQ(no_force.exit_code, 1);
    EXPECT_NE(no_force.err.find("force"), std::string::npos);
    auto forced = run(t + " --force-out-of-range");
    EXPECT_EQ(forced.exit_code, 0) << forced.err;

    // usage: unknown config key
    std::ofstream(path("typo.json")) << R"({"iterationz":3})";
    auto typo = run("train --data " + path("d.t") + " --config " + path("typo.json"));
    EXPECT_EQ(typo.exit_code, 1);
    EXPECT_NE(typo.err.find("iterationz"), std::string::npos);
}

TEST_F(CliFixture, SeedFlagOverridesConfig) {
    save_tensor(path("d.t"), make_quadrant_tensor(12, 2));
    auto a = run("mask --like " + path("d.t") + " --rate 0.5 --seed 1 --out " + path("a.t"));
    auto b = run("mask --like " + path("d.t") + " --rate 0.5 --seed 2 --out " + path("b.t"));
    ASSERT_EQ(a.exit_code, 0);
    ASSERT_EQ(b.exit_code, 0);
    EXPECT_NE(slurp(path("a.t")), slurp(path("b.t")));
}

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <map>
#include <sstream>

#include <json.hpp>

#include "test_util.hpp"
#include "usvol/frameio.hpp"
#include "usvol/phantom.hpp"

using namespace usvol;
using usvol::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status = -1;
    std::string out;
    std::string err;
};

Run usvol_cli(const std::string& args)
{
    TempDir scratch;
    const auto err_path = scratch / "stderr.txt";
    const std::string cmd = std::string(USVOL_CLI_PATH) + " " + args + " 2>" + err_path.string();
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int raw = pclose(pipe);
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.err = usvol::testing::read_file(err_path);
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Relative path -> bytes for every regular file under root.
std::map<std::string, std::string> tree(const fs::path& root)
{
    std::map<std::string, std::string> t;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            t[fs::relative(e.path(), root).string()] = usvol::testing::read_file(e.path());
    return t;
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(usvol::testing::read_file(p)); }

int count_lines(const std::string& s)
{
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

} // namespace

TEST(Cli, SynthDefaultsMatchAcquisitionGeometry)
{
    TempDir dir;
    const auto r = usvol_cli("synth --out " + q(dir.path()));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto m = read_json(dir / "frames/manifest.json");
    EXPECT_EQ(m.at("width"), 100);
    EXPECT_EQ(m.at("height"), 128);
    EXPECT_EQ(m.at("frame_count"), 150);
    const auto s = load_stack(dir / "frames/manifest.json");
    EXPECT_EQ(s.frames.size(), 150u);
    EXPECT_EQ(load_masks(dir / "masks/manifest.json").frames.size(), 150u);
}

TEST(Cli, SynthBoneStudyGeometry)
{
    TempDir dir;
    const auto r = usvol_cli("synth --frames 300 --size 128x128 --out " + q(dir.path()));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto s = load_stack(dir / "frames/manifest.json");
    ASSERT_EQ(s.frames.size(), 300u);
    EXPECT_EQ(s.meta.width, 128);
    EXPECT_EQ(s.meta.height, 128);
}

TEST(Cli, SynthSameSeedIsByteIdentical)
{
    TempDir a, b, c;
    const std::string args = "synth --frames 12 --slant 20 --frame-spacing 0.15 --seed 9 --out ";
    ASSERT_EQ(usvol_cli(args + q(a.path())).status, 0);
    ASSERT_EQ(usvol_cli(args + q(b.path()) + " --threads 3").status, 0);
    EXPECT_EQ(tree(a.path()), tree(b.path()));
    ASSERT_EQ(usvol_cli("synth --frames 12 --slant 20 --frame-spacing 0.15 --seed 10 --out " + q(c.path())).status, 0);
    EXPECT_NE(tree(a.path()), tree(c.path()));
}

TEST(Cli, SynthRejectsTubeLeavingTheFrame)
{
    TempDir dir;
    const auto r = usvol_cli("synth --slant 45 --out " + q(dir.path()));
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_NE(usvol_cli("synth --size 100by128 --out " + q(dir.path())).status, 0);
}

TEST(Cli, PipelineVolumeDepth)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --out " + q(dir / "ph")).status, 0);
    const auto r = usvol_cli("pipeline --input " + q(dir / "ph/frames/manifest.json") + " --out " + q(dir / "run"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto side = read_json(dir / "run/volume.json");
    // Default 0.8 mm frames over 0.3 mm pixels: three planes per frame step.
    EXPECT_EQ(side.at("dims")[2], (150 - 1) * 3 + 1);
    EXPECT_EQ(side.at("dims")[0], 100);
    EXPECT_EQ(side.at("dims")[1], 128);
    for (const char* f : {"xy_slice.pgm", "yz_slice.pgm", "xz_slice.pgm", "mip_z.pgm"})
        EXPECT_TRUE(fs::exists(dir / "run/renders" / f)) << f;
    EXPECT_FALSE(fs::exists(dir / "run/steps"));

    const auto z2 = usvol_cli("pipeline --z-upsample 2 --input " + q(dir / "ph/frames/manifest.json") +
                              " --out " + q(dir / "run2"));
    ASSERT_EQ(z2.status, 0) << z2.err;
    EXPECT_EQ(read_json(dir / "run2/volume.json").at("dims")[2], 149 * 2 + 1);
}

TEST(Cli, DumpStepsOnOneFrameWritesEightImages)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --frames 1 --out " + q(dir / "ph")).status, 0);
    const auto r = usvol_cli("pipeline --dump-steps --input " + q(dir / "ph/frames/manifest.json") +
                             " --out " + q(dir / "run"));
    ASSERT_EQ(r.status, 0) << r.err;
    int n = 0;
    for (const auto& e : fs::directory_iterator(dir / "run/steps")) {
        ++n;
        EXPECT_EQ(e.path().extension(), ".png");
    }
    EXPECT_EQ(n, 8);
    EXPECT_NE(r.err.find("at least 2 frames"), std::string::npos) << r.err;
}

TEST(Cli, BlankStackWarnsAndRefusesEmptyVolume)
{
    TempDir dir;
    FrameStack s;
    s.meta = {64, 64, 3};
    s.frames.assign(3, Frame(64, 64, 4));
    const auto manifest = save_stack(s, dir / "blank");
    const auto r = usvol_cli("pipeline --input " + q(manifest) + " --out " + q(dir / "run"));
    EXPECT_EQ(r.status, 0);
    EXPECT_NE(r.err.find("0 frames segmented"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("refusing to write an empty volume"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(dir / "run/volume.raw"));
}

TEST(Cli, ModuleErrorNamesFrameAndStage)
{
    TempDir dir;
    FrameStack s;
    s.meta = {4, 4, 2};
    s.frames.assign(2, Frame(4, 4));
    const auto manifest = save_stack(s, dir / "tiny");
    const auto r = usvol_cli("pipeline --input " + q(manifest) + " --out " + q(dir / "run"));
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.err.find("frame 0"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("enhance"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, ConfigFilePrecedence)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --frames 3 --out " + q(dir / "ph")).status, 0);
    usvol::testing::write_file(dir / "cfg.json", R"({"threshold": 255})");
    const std::string in = " --input " + q(dir / "ph/frames/manifest.json");

    const auto from_file = usvol_cli("pipeline --config " + q(dir / "cfg.json") + in + " --out " + q(dir / "a"));
    EXPECT_EQ(from_file.status, 0);
    EXPECT_NE(from_file.err.find("0 frames segmented"), std::string::npos) << from_file.err;

    const auto flag_wins = usvol_cli("pipeline --config " + q(dir / "cfg.json") + " --threshold 49" + in +
                                     " --out " + q(dir / "b"));
    EXPECT_EQ(flag_wins.status, 0);
    EXPECT_EQ(flag_wins.err.find("0 frames segmented"), std::string::npos) << flag_wins.err;
    EXPECT_TRUE(fs::exists(dir / "b/volume.raw"));

    usvol::testing::write_file(dir / "bad.json", R"({"thresh": 1})");
    EXPECT_EQ(usvol_cli("pipeline --config " + q(dir / "bad.json") + in + " --out " + q(dir / "c")).status, 1);
}

TEST(Cli, SubcommandsComposeToThePipeline)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --frames 8 --slant 20 --frame-spacing 0.15 --out " + q(dir / "ph")).status, 0);
    ASSERT_EQ(usvol_cli("enhance --input " + q(dir / "ph/frames/manifest.json") + " --out " + q(dir / "enh")).status, 0);
    ASSERT_EQ(usvol_cli("segment --input " + q(dir / "enh/manifest.json") + " --out " + q(dir / "seg")).status, 0);
    ASSERT_EQ(usvol_cli("reconstruct --z-upsample 2 --input " + q(dir / "seg/segmented/manifest.json") +
                        " --out " + q(dir / "vol.raw")).status, 0);
    ASSERT_EQ(usvol_cli("render --volume " + q(dir / "vol.raw") + " --what slice --axis z --out " +
                        q(dir / "xy.pgm")).status, 0);
    ASSERT_EQ(usvol_cli("render --volume " + q(dir / "vol.raw") + " --what composite --axis x --alpha-scale 0.5 --out " +
                        q(dir / "comp.png")).status, 0);
    EXPECT_EQ(read_image(dir / "comp.png").width, 128);

    ASSERT_EQ(usvol_cli("pipeline --z-upsample 2 --input " + q(dir / "ph/frames/manifest.json") + " --out " +
                        q(dir / "run")).status, 0);
    EXPECT_EQ(usvol::testing::read_file(dir / "vol.raw"), usvol::testing::read_file(dir / "run/volume.raw"));
    EXPECT_EQ(usvol::testing::read_file(dir / "xy.pgm"), usvol::testing::read_file(dir / "run/renders/xy_slice.pgm"));
    EXPECT_EQ(usvol::testing::read_file(dir / "seg/circles.csv"), usvol::testing::read_file(dir / "run/circles.csv"));

    EXPECT_NE(usvol_cli("render --volume " + q(dir / "vol.raw") + " --what slice --axis z --index 99 --out " +
                        q(dir / "bad.pgm")).status, 0);
}

TEST(Cli, EvaluateIdenticalStacks)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --frames 10 --out " + q(dir / "ph")).status, 0);
    const auto m = q(dir / "ph/masks/manifest.json");
    const auto r = usvol_cli("evaluate --auto " + m + " --reference " + m);
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_EQ(r.out, "1.0000\n");
}

TEST(Cli, EvaluatePhantomRunWithCsvAndCenterline)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --slant 20 --frame-spacing 0.15 --seed 42 --out " + q(dir / "ph")).status, 0);
    ASSERT_EQ(usvol_cli("pipeline --input " + q(dir / "ph/frames/manifest.json") + " --out " + q(dir / "run")).status, 0);
    const auto r = usvol_cli("evaluate --auto " + q(dir / "run/masks/manifest.json") + " --reference " +
                             q(dir / "ph/masks/manifest.json") + " --sample every:8 --csv " + q(dir / "iou.csv") +
                             " --circles " + q(dir / "run/circles.csv") + " --centerline " + q(dir / "cl.json"));
    ASSERT_EQ(r.status, 0) << r.err;
    EXPECT_GE(std::stod(r.out), 0.85);

    const auto csv = usvol::testing::read_file(dir / "iou.csv");
    EXPECT_EQ(count_lines(csv), 1 + 19 + 1);
    EXPECT_EQ(csv.rfind("mean,", 0), std::string::npos);
    EXPECT_NE(csv.find("\n144,"), std::string::npos);
    const auto cl = read_json(dir / "cl.json");
    EXPECT_EQ(cl.at("points"), 150);
    EXPECT_GE(cl.at("rms_residual_px").get<double>(), 0.0);
}

TEST(Cli, EvaluateMisalignedStacksFails)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --frames 10 --out " + q(dir / "a")).status, 0);
    ASSERT_EQ(usvol_cli("synth --frames 11 --out " + q(dir / "b")).status, 0);
    const auto r = usvol_cli("evaluate --auto " + q(dir / "a/masks/manifest.json") + " --reference " +
                             q(dir / "b/masks/manifest.json"));
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, UsageErrors)
{
    EXPECT_NE(usvol_cli("").status, 0);
    EXPECT_NE(usvol_cli("frobnicate").status, 0);
    EXPECT_NE(usvol_cli("pipeline --out /tmp/x").status, 0);
    EXPECT_NE(usvol_cli("pipeline --input /nonexistent/manifest.json --out /tmp/x").status, 0);
}

TEST(Cli, PipelineOutputIndependentOfThreads)
{
    TempDir dir;
    ASSERT_EQ(usvol_cli("synth --frames 20 --slant 20 --frame-spacing 0.15 --out " + q(dir / "ph")).status, 0);
    const std::string in = " --input " + q(dir / "ph/frames/manifest.json");
    ASSERT_EQ(usvol_cli("pipeline --dump-steps --threads 1" + in + " --out " + q(dir / "t1")).status, 0);
    ASSERT_EQ(usvol_cli("pipeline --dump-steps --threads 4" + in + " --out " + q(dir / "t4")).status, 0);
    EXPECT_EQ(tree(dir / "t1"), tree(dir / "t4"));
}

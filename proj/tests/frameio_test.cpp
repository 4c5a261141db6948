// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>
#include <png.h>

#include <random>

#include "test_util.hpp"
#include "usvol/frameio.hpp"
#include "usvol/phantom.hpp"
#include "usvol/reconstruct.hpp"

using namespace usvol;
using usvol::testing::TempDir;
namespace fs = std::filesystem;

namespace {

void write_manifest(const fs::path& p, int w, int h, int n, const std::string& extra = "")
{
    usvol::testing::write_file(p, "{\"width\": " + std::to_string(w) + ", \"height\": " +
                                      std::to_string(h) + ", \"frame_count\": " +
                                      std::to_string(n) + extra + "}");
}

} // namespace

TEST(FrameIO, DirectoryModeLoadsFramesLexicographically)
{
    TempDir dir;
    for (int k : {2, 0, 1}) write_pgm(Frame(8, 8, static_cast<std::uint8_t>(10 * k)), dir / ("f" + std::to_string(k) + ".pgm"));
    write_manifest(dir / "manifest.json", 8, 8, 3);

    const auto s = load_stack(dir / "manifest.json");
    ASSERT_EQ(s.frames.size(), 3u);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(s.frames[k].at(3, 3), 10 * k);
    EXPECT_DOUBLE_EQ(s.meta.pixel_spacing_x, 0.3);
    EXPECT_DOUBLE_EQ(s.meta.frame_spacing_z, 0.8);
    EXPECT_FALSE(s.binary);
}

TEST(FrameIO, ManifestOrderIsPreserved)
{
    TempDir dir;
    for (int k = 0; k < 3; ++k) write_pgm(Frame(4, 2, static_cast<std::uint8_t>(k)), dir / ("a" + std::to_string(k) + ".pgm"));
    write_manifest(dir / "m.json", 4, 2, 3, ", \"frames\": [\"a2.pgm\", \"a0.pgm\", \"a1.pgm\"]");
    const auto s = load_stack(dir / "m.json");
    EXPECT_EQ(s.frames[0].at(0, 0), 2);
    EXPECT_EQ(s.frames[1].at(0, 0), 0);
    EXPECT_EQ(s.frames[2].at(0, 0), 1);
    // Loading twice yields identical bytes.
    const auto again = load_stack(dir / "m.json");
    for (int k = 0; k < 3; ++k) EXPECT_EQ(s.frames[k], again.frames[k]);
}

TEST(FrameIO, DimensionMismatchIsRejected)
{
    TempDir dir;
    write_pgm(Frame(100, 128), dir / "f0.pgm");
    write_pgm(Frame(128, 128), dir / "f1.pgm");
    write_manifest(dir / "manifest.json", 100, 128, 2);
    try {
        load_stack(dir / "manifest.json");
        FAIL() << "expected dimension mismatch";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("dimension mismatch"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos);
    }
}

TEST(FrameIO, FrameCountMismatchAndMissingFiles)
{
    TempDir dir;
    write_pgm(Frame(4, 4), dir / "f0.pgm");
    write_manifest(dir / "manifest.json", 4, 4, 2);
    EXPECT_THROW(load_stack(dir / "manifest.json"), Error);

    write_manifest(dir / "listed.json", 4, 4, 1, ", \"frames\": [\"nope.pgm\"]");
    EXPECT_THROW(load_stack(dir / "listed.json"), Error);
    EXPECT_THROW(load_stack(dir / "absent.json"), Error);
}

TEST(FrameIO, MalformedManifestAndBadMeta)
{
    TempDir dir;
    usvol::testing::write_file(dir / "bad.json", "{ not json");
    EXPECT_THROW(load_stack(dir / "bad.json"), Error);
    write_manifest(dir / "zero.json", 0, 4, 1);
    EXPECT_THROW(load_stack(dir / "zero.json"), Error);
    write_pgm(Frame(4, 4), dir / "f.pgm");
    write_manifest(dir / "neg.json", 4, 4, 1, ", \"frame_spacing_z_mm\": -1");
    EXPECT_THROW(load_stack(dir / "neg.json"), Error);
}

TEST(FrameIO, NonGrayscaleInputIsRejected)
{
    TempDir dir;
    usvol::testing::write_file(dir / "c.pgm", std::string("P6\n2 1\n255\n") + std::string(6, '\x10'));
    EXPECT_THROW(read_image(dir / "c.pgm"), Error);

    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = 2;
    img.height = 2;
    img.format = PNG_FORMAT_RGB;
    const std::vector<std::uint8_t> rgb(12, 77);
    ASSERT_TRUE(png_image_write_to_file(&img, (dir / "c.png").c_str(), 0, rgb.data(), 0, nullptr));
    try {
        read_image(dir / "c.png");
        FAIL() << "expected non-grayscale error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("non-grayscale"), std::string::npos);
    }
}

TEST(FrameIO, PgmHeaderCommentsAndPngRoundTrip)
{
    TempDir dir;
    usvol::testing::write_file(dir / "c.pgm", std::string("P5\n# comment\n3 1\n# x\n255\n") + "\x01\x02\x03");
    const auto f = read_image(dir / "c.pgm");
    EXPECT_EQ(f.width, 3);
    EXPECT_EQ(f.at(2, 0), 3);

    std::mt19937 rng(5);
    const auto g = usvol::testing::random_frame(rng, 17, 9);
    write_image(g, dir / "g.png");
    EXPECT_EQ(read_image(dir / "g.png"), g);
}

TEST(FrameIO, FrameSpacingDerivedFromTrackLengthRoundTrips)
{
    // 120 mm of track over 150 frames.
    const double spacing = 120.0 / 150.0;
    EXPECT_DOUBLE_EQ(spacing, 0.8);
    TempDir dir;
    FrameStack s;
    s.meta = {8, 8, 2, 0.3, 0.25, spacing};
    s.frames = {Frame(8, 8, 1), Frame(8, 8, 2)};
    const auto manifest = save_stack(s, dir.path());
    const auto back = load_stack(manifest);
    EXPECT_EQ(back.meta, s.meta);
    EXPECT_DOUBLE_EQ(back.meta.frame_spacing_z, 0.8);
}

TEST(FrameIO, RandomStacksRoundTripBitExact)
{
    std::mt19937 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        TempDir dir;
        std::uniform_int_distribution<int> dim(1, 20);
        FrameStack s;
        s.meta.width = dim(rng);
        s.meta.height = dim(rng);
        s.meta.frame_count = dim(rng) % 5 + 1;
        for (int k = 0; k < s.meta.frame_count; ++k)
            s.frames.push_back(usvol::testing::random_frame(rng, s.meta.width, s.meta.height));
        const auto back = load_stack(save_stack(s, dir.path()));
        ASSERT_EQ(back.frames.size(), s.frames.size());
        for (std::size_t k = 0; k < s.frames.size(); ++k) EXPECT_EQ(back.frames[k], s.frames[k]);
    }
}

TEST(FrameIO, SingleVoxelVolume)
{
    TempDir dir;
    const Volume v(1, 1, 1, {0.3, 0.3, 0.8}, 0);
    save_volume(v, dir / "v.raw");
    EXPECT_EQ(fs::file_size(dir / "v.raw"), 1u);
    const auto sidecar = usvol::testing::read_file(dir / "v.json");
    EXPECT_NE(sidecar.find("\"dims\""), std::string::npos);
    const auto back = load_volume(dir / "v.raw");
    EXPECT_EQ(back.nx, 1);
    EXPECT_EQ(back.ny, 1);
    EXPECT_EQ(back.nz, 1);
    EXPECT_EQ(back, v);
}

TEST(FrameIO, VolumePayloadIsXFastestThenYThenZ)
{
    TempDir dir;
    Volume v(2, 2, 2, {1, 1, 1});
    for (int z = 0; z < 2; ++z)
        for (int y = 0; y < 2; ++y)
            for (int x = 0; x < 2; ++x) v.at(x, y, z) = static_cast<std::uint8_t>(x + 2 * y + 4 * z);
    save_volume(v, dir / "v.raw");
    const auto bytes = usvol::testing::read_file(dir / "v.raw");
    ASSERT_EQ(bytes.size(), 8u);
    for (int i = 0; i < 8; ++i) EXPECT_EQ(static_cast<unsigned char>(bytes[i]), i);
}

TEST(FrameIO, PhantomVolumeRoundTripIsByteIdentical)
{
    TempDir dir;
    TubePhantomParams p;
    p.meta = {64, 64, 32, 0.3, 0.3, 0.3};
    p.tube_radius_mm = 3.0;
    const auto ph = synth_tube_stack(p);
    const auto v = build_volume(ph.frames, 1);
    ASSERT_EQ(v.nz, 32);
    save_volume(v, dir / "phantom.raw");
    const auto bytes = usvol::testing::read_file(dir / "phantom.raw");
    ASSERT_EQ(bytes.size(), v.data.size());
    EXPECT_TRUE(std::equal(bytes.begin(), bytes.end(), v.data.begin(),
                           [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }));
    EXPECT_EQ(load_volume(dir / "phantom.raw"), v);
}

TEST(FrameIO, VolumePayloadSizeMismatchIsRejected)
{
    TempDir dir;
    save_volume(Volume(2, 2, 2, {1, 1, 1}), dir / "v.raw");
    usvol::testing::write_file(dir / "v.raw", "abc");
    EXPECT_THROW(load_volume(dir / "v.raw"), Error);
}

TEST(FrameIO, MasksAllZeroLoadWithBinaryFlag)
{
    TempDir dir;
    FrameStack s;
    s.meta = {5, 5, 2};
    s.frames = {Frame(5, 5), Frame(5, 5)};
    const auto m = load_masks(save_stack(s, dir.path()));
    EXPECT_TRUE(m.binary);
}

TEST(FrameIO, NonBinaryMaskValueNamesFrameAndCoordinate)
{
    TempDir dir;
    FrameStack s;
    s.meta = {5, 5, 2};
    s.frames = {Frame(5, 5), Frame(5, 5)};
    s.frames[1].at(3, 2) = 7;
    const auto manifest = save_stack(s, dir.path());
    try {
        load_masks(manifest);
        FAIL() << "expected non-binary error";
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("frame 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("(3, 2)"), std::string::npos) << msg;
        EXPECT_NE(msg.find('7'), std::string::npos) << msg;
    }
}

TEST(FrameIO, PhantomGroundTruthMasksRoundTrip)
{
    TempDir dir;
    TubePhantomParams p;
    p.meta = {40, 40, 6, 0.3, 0.3, 0.3};
    p.tube_radius_mm = 2.0;
    p.slant_deg = 30;
    const auto ph = synth_tube_stack(p);
    const auto back = load_masks(save_stack(ph.masks, dir.path(), "mask"));
    ASSERT_EQ(back.frames.size(), ph.masks.frames.size());
    for (std::size_t k = 0; k < back.frames.size(); ++k) EXPECT_EQ(back.frames[k], ph.masks.frames[k]);
}

TEST(FrameIO, UnwritablePathFails)
{
    EXPECT_THROW(save_volume(Volume(1, 1, 1, {1, 1, 1}), "/nonexistent_dir/x/v.raw"), Error);
}

// SPDX-License-Identifier: Apache-2.0
//
// usvol: command-line front end for the ultrasound volume pipeline.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "usvol/enhance.hpp"
#include "usvol/evaluate.hpp"
#include "usvol/frameio.hpp"
#include "usvol/phantom.hpp"
#include "usvol/pipeline.hpp"
#include "usvol/reconstruct.hpp"
#include "usvol/segment.hpp"

namespace fs = std::filesystem;
using namespace usvol;

namespace {

std::pair<int, int> parse_size(const std::string& s)
{
    int w = 0, h = 0;
    char sep = 0;
    std::istringstream in(s);
    if (!(in >> w >> sep >> h) || (sep != 'x' && sep != 'X') || !in.eof() || w < 1 || h < 1)
        throw Error("bad size '" + s + "' (expected WIDTHxHEIGHT)");
    return {w, h};
}

// Pipeline flags shared by several subcommands. Values only override the base
// config when the flag was actually given.
struct ConfigFlags {
    std::string config_file;
    int threshold = 49;
    std::vector<int> tiles;
    double clip_limit = 2.0;
    std::string mode = "circle";
    int r_min = 5;
    int r_max = 0;
    int z_upsample = 0;
    bool dump_steps = false;
    unsigned threads = 1;

    CLI::Option* o_threshold = nullptr;
    CLI::Option* o_tiles = nullptr;
    CLI::Option* o_clip = nullptr;
    CLI::Option* o_mode = nullptr;
    CLI::Option* o_rmin = nullptr;
    CLI::Option* o_rmax = nullptr;
    CLI::Option* o_zup = nullptr;
    CLI::Option* o_dump = nullptr;
    CLI::Option* o_threads = nullptr;

    void add_enhance(CLI::App* app)
    {
        o_tiles = app->add_option("--clahe-tiles", tiles, "CLAHE tile grid: N or NX NY (default 8 8)")
                      ->expected(1, 2);
        o_clip = app->add_option("--clip-limit", clip_limit,
                                 "CLAHE clip limit relative to mean bin height (default 2.0)");
    }
    void add_segment(CLI::App* app)
    {
        o_threshold = app->add_option("--threshold", threshold, "foreground if pixel > T (default 49)");
        o_mode = app->add_option("--mode", mode, "circle (Hough fit) or contour (filled contour)")
                     ->check(CLI::IsMember({"circle", "contour"}));
        o_rmin = app->add_option("--r-min", r_min, "smallest Hough radius in px (default 5)");
        o_rmax = app->add_option("--r-max", r_max, "largest Hough radius in px (default min(w,h)/2)");
    }
    void add_common(CLI::App* app)
    {
        app->add_option("--config", config_file, "JSON config; CLI flags take precedence")
            ->check(CLI::ExistingFile);
        o_threads = app->add_option("--threads", threads, "worker threads (default 1)")
                        ->check(CLI::PositiveNumber);
    }

    PipelineConfig resolve() const
    {
        PipelineConfig cfg;
        if (!config_file.empty()) cfg = load_config_file(config_file, cfg);
        auto given = [](const CLI::Option* o) { return o && o->count() > 0; };
        if (given(o_threshold)) cfg.threshold = threshold;
        if (given(o_tiles)) {
            cfg.clahe.tiles_x = tiles.at(0);
            cfg.clahe.tiles_y = tiles.size() > 1 ? tiles[1] : tiles[0];
        }
        if (given(o_clip)) cfg.clahe.clip_limit_rel = clip_limit;
        if (given(o_mode)) cfg.mode = parse_mode(mode);
        if (given(o_rmin)) cfg.r_min = r_min;
        if (given(o_rmax)) cfg.r_max = r_max;
        if (given(o_zup)) cfg.z_upsample = z_upsample;
        if (given(o_dump)) cfg.dump_steps = dump_steps;
        if (given(o_threads)) cfg.threads = threads;
        cfg.validate();
        return cfg;
    }
};

struct SynthFlags {
    std::string out;
    int frames = 150;
    std::string size = "100x128";
    double pixel_spacing = kDefaultPixelSpacingMm;
    double frame_spacing = kDefaultFrameSpacingMm;
    TubePhantomParams params;
    unsigned threads = 1;
};

int cmd_synth(const SynthFlags& f)
{
    TubePhantomParams p = f.params;
    const auto [w, h] = parse_size(f.size);
    p.meta = {w, h, f.frames, f.pixel_spacing, f.pixel_spacing, f.frame_spacing};
    const auto ph = synth_tube_stack(p, f.threads);
    const fs::path out = f.out;
    const auto frames = save_stack(ph.frames, out / "frames");
    const auto masks = save_stack(ph.masks, out / "masks", "mask");
    std::cerr << "wrote " << p.meta.frame_count << " frames (" << w << "x" << h << ") to "
              << frames.string() << " and ground truth to " << masks.string() << '\n';
    return 0;
}

int cmd_enhance(const std::string& input, const std::string& out, const ConfigFlags& flags)
{
    const auto cfg = flags.resolve();
    const auto stack = load_stack(input);
    save_stack(enhance_stack(stack, cfg.clahe, cfg.threads), out, "enhanced");
    return 0;
}

int cmd_segment(const std::string& input, const std::string& out, const ConfigFlags& flags)
{
    const auto cfg = flags.resolve();
    const auto stack = load_stack(input);
    const auto seg = segment_stack(stack, cfg.segment_params(), cfg.threads);
    const fs::path dir = out;
    save_stack(seg.segmented, dir / "segmented", "segmented");
    save_stack(seg.masks, dir / "masks", "mask");
    write_circles_csv(seg.circles, dir / "circles.csv");
    std::cerr << seg.segmented_indices.size() << " frames segmented\n";
    return 0;
}

int cmd_reconstruct(const std::string& input, const std::string& out, int z_upsample,
                    unsigned threads)
{
    const auto stack = load_stack(input);
    const int u = z_upsample > 0 ? z_upsample : default_z_upsample(stack.meta);
    const auto v = build_volume(stack, u, threads);
    save_volume(v, out);
    std::cerr << "volume " << v.nx << "x" << v.ny << "x" << v.nz << " (z_upsample " << u << ")\n";
    return 0;
}

int cmd_render(const std::string& volume, const std::string& out, const std::string& what,
               const std::string& axis, int index, double alpha_scale, unsigned threads)
{
    const auto v = load_volume(volume);
    const Axis ax = parse_axis(axis);
    Frame img;
    if (what == "slice")
        img = extract_slice(v, ax, index >= 0 ? index : axis_extent(v, ax) / 2);
    else if (what == "mip")
        img = render_mip(v, ax, threads);
    else
        img = render_composite(v, {ax, RenderMode::composite, alpha_scale}, threads);
    write_image(img, out);
    return 0;
}

int cmd_evaluate(const std::string& auto_masks, const std::string& ref_masks,
                 const std::string& sample, const std::string& csv, const std::string& circles,
                 const std::string& centerline)
{
    const auto a = load_masks(auto_masks);
    const auto r = load_masks(ref_masks);
    if (a.meta.width != r.meta.width || a.meta.height != r.meta.height ||
        a.meta.frame_count != r.meta.frame_count)
        throw Error("misaligned stacks: " + std::to_string(a.meta.frame_count) + " frames of " +
                    std::to_string(a.meta.width) + "x" + std::to_string(a.meta.height) + " vs " +
                    std::to_string(r.meta.frame_count) + " frames of " +
                    std::to_string(r.meta.width) + "x" + std::to_string(r.meta.height));
    const auto idx = sample.empty() ? evenly_spaced(a.meta.frame_count, std::min(20, a.meta.frame_count))
                                    : parse_sample_spec(sample, a.meta.frame_count);
    const auto report = mean_iou(a, r, idx);
    if (!csv.empty()) {
        std::ofstream out(csv);
        if (!out) throw Error("cannot write " + csv);
        write_iou_csv(report, out);
    }
    if (!circles.empty()) {
        const auto c = read_circles_csv(circles);
        const auto fit = centerline_fit(c);
        const std::string json = centerline_json(fit, static_cast<int>(c.size()));
        if (centerline.empty()) {
            std::cerr << json << '\n';
        } else {
            std::ofstream out(centerline);
            if (!out) throw Error("cannot write " + centerline);
            out << json << '\n';
        }
    }
    std::printf("%.4f\n", report.mean_iou);
    return 0;
}

int cmd_pipeline(const std::string& input, const std::string& out, const ConfigFlags& flags)
{
    const auto cfg = flags.resolve();
    const auto stack = load_stack(input);
    const auto result = run_pipeline(stack, cfg);
    const auto segmented = result.segmentation.segmented_indices.size();
    if (segmented == 0) std::cerr << "warning: 0 frames segmented\n";
    write_pipeline_outputs(stack, result, cfg, out);
    if (!result.volume) {
        if (segmented == 0)
            std::cerr << "refusing to write an empty volume: no frame produced a segmentation\n";
        else
            std::cerr << "no volume written: reconstruction needs at least 2 frames\n";
        return 0;
    }
    const auto& v = *result.volume;
    std::cerr << segmented << " of " << stack.frames.size() << " frames segmented; volume "
              << v.nx << "x" << v.ny << "x" << v.nz << " (z_upsample " << result.z_upsample
              << ") written to " << (fs::path(out) / "volume.raw").string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"usvol: 3D ultrasound volume reconstruction from linear-track frame stacks"};
    app.require_subcommand(1);

    // synth
    SynthFlags synth;
    auto* s = app.add_subcommand("synth", "generate a slanted-tube phantom stack + ground truth");
    s->add_option("--out", synth.out, "output directory")->required();
    s->add_option("--frames", synth.frames, "frame count (default 150)")->check(CLI::PositiveNumber);
    s->add_option("--size", synth.size, "WIDTHxHEIGHT in px (default 100x128)");
    s->add_option("--pixel-spacing", synth.pixel_spacing, "mm per pixel (default 0.3)");
    s->add_option("--frame-spacing", synth.frame_spacing, "mm between frames (default 0.8)");
    s->add_option("--radius-mm", synth.params.tube_radius_mm, "tube radius in mm (default 4)");
    s->add_option("--slant", synth.params.slant_deg, "tube tilt from Z in degrees (default 0)");
    s->add_option("--center-x", synth.params.center0_x, "section centre X in frame 0 (px)");
    s->add_option("--center-y", synth.params.center0_y, "section centre Y in frame 0 (px)");
    s->add_option("--interior-mean", synth.params.interior_mean, "tube intensity mean");
    s->add_option("--background-mean", synth.params.background_mean, "background intensity mean");
    s->add_option("--speckle", synth.params.speckle_scale, "speckle scale (0 disables)");
    s->add_option("--seed", synth.params.seed, "random seed (default 42)");
    s->add_option("--threads", synth.threads, "worker threads")->check(CLI::PositiveNumber);

    std::string input, out;

    // enhance
    ConfigFlags enh_flags;
    auto* e = app.add_subcommand("enhance", "log compression, squaring, median, CLAHE");
    e->add_option("--input", input, "stack manifest")->required();
    e->add_option("--out", out, "output directory")->required();
    enh_flags.add_enhance(e);
    enh_flags.add_common(e);

    // segment
    ConfigFlags seg_flags;
    auto* g = app.add_subcommand("segment", "segment an enhanced stack");
    g->add_option("--input", input, "enhanced stack manifest")->required();
    g->add_option("--out", out, "output directory")->required();
    seg_flags.add_segment(g);
    seg_flags.add_common(g);

    // reconstruct
    int z_upsample = 0;
    unsigned threads = 1;
    auto* r = app.add_subcommand("reconstruct", "build a volume from a (segmented) stack");
    r->add_option("--input", input, "stack manifest")->required();
    r->add_option("--out", out, "volume .raw path (sidecar .json written next to it)")->required();
    r->add_option("--z-upsample", z_upsample, "planes per frame step (default: isotropic)");
    r->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    // render
    std::string volume, what = "mip", axis = "z";
    int index = -1;
    double alpha_scale = 0.5;
    auto* d = app.add_subcommand("render", "slice or project a volume");
    d->add_option("--volume", volume, "volume .raw path")->required();
    d->add_option("--out", out, "output image (.pgm or .png)")->required();
    d->add_option("--what", what, "slice, mip or composite")
        ->check(CLI::IsMember({"slice", "mip", "composite"}));
    d->add_option("--axis", axis, "x, y or z")->check(CLI::IsMember({"x", "y", "z"}));
    d->add_option("--index", index, "slice index (default: centre)");
    d->add_option("--alpha-scale", alpha_scale, "opacity scale in (0, 1] for composite");
    d->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    // evaluate
    std::string auto_masks, ref_masks, sample, csv, circles, centerline;
    auto* v = app.add_subcommand("evaluate", "IoU of automatic vs reference masks");
    v->add_option("--auto", auto_masks, "automatic mask manifest")->required();
    v->add_option("--reference", ref_masks, "reference mask manifest")->required();
    v->add_option("--sample", sample, "every:N, evenly:K or i,j,k (default evenly:20, fewer for short stacks)");
    v->add_option("--csv", csv, "per-frame IoU CSV output");
    v->add_option("--circles", circles, "circles.csv from segment/pipeline for the centerline fit");
    v->add_option("--centerline", centerline, "centerline JSON output");

    // pipeline
    ConfigFlags pipe_flags;
    auto* p = app.add_subcommand("pipeline", "enhance, segment, reconstruct and render");
    p->add_option("--input", input, "stack manifest")->required();
    p->add_option("--out", out, "output directory")->required();
    pipe_flags.add_enhance(p);
    pipe_flags.add_segment(p);
    pipe_flags.o_zup = p->add_option("--z-upsample", pipe_flags.z_upsample,
                                     "planes per frame step (default: isotropic)");
    pipe_flags.o_dump = p->add_flag("--dump-steps", pipe_flags.dump_steps,
                                    "write the 8 per-frame stage images");
    pipe_flags.add_common(p);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*s) return cmd_synth(synth);
        if (*e) return cmd_enhance(input, out, enh_flags);
        if (*g) return cmd_segment(input, out, seg_flags);
        if (*r) return cmd_reconstruct(input, out, z_upsample, threads);
        if (*d) return cmd_render(volume, out, what, axis, index, alpha_scale, threads);
        if (*v) return cmd_evaluate(auto_masks, ref_masks, sample, csv, circles, centerline);
        if (*p) return cmd_pipeline(input, out, pipe_flags);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
    return 1;
}

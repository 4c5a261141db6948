// SPDX-License-Identifier: Apache-2.0
#include "usvol/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "usvol/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace usvol {

void PipelineConfig::validate() const
{
    if (threshold < 0 || threshold > 255) throw Error("threshold must be in [0, 255]");
    clahe.validate();
    if (r_min < 1) throw Error("r-min must be >= 1");
    if (r_max != 0 && r_max < r_min) throw Error("r-max must be >= r-min");
    if (z_upsample < 0) throw Error("z-upsample must be >= 1 (or 0 for automatic)");
    if (threads < 1) throw Error("threads must be >= 1");
}

SegmentParams PipelineConfig::segment_params() const
{
    return {mode, threshold, r_min, r_max};
}

SegmentMode parse_mode(const std::string& s)
{
    if (s == "circle") return SegmentMode::circle;
    if (s == "contour") return SegmentMode::contour;
    throw Error("unknown mode '" + s + "' (expected circle or contour)");
}

const char* mode_name(SegmentMode m) { return m == SegmentMode::circle ? "circle" : "contour"; }

PipelineConfig config_from_json(const std::string& json_text, PipelineConfig base)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed config JSON: ") + e.what());
    }
    if (!j.is_object()) throw Error("config must be a JSON object");
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "threshold") base.threshold = val.get<int>();
            else if (key == "clahe-tiles") {
                if (val.is_array() && val.size() == 2) {
                    base.clahe.tiles_x = val[0].get<int>();
                    base.clahe.tiles_y = val[1].get<int>();
                } else {
                    base.clahe.tiles_x = base.clahe.tiles_y = val.get<int>();
                }
            }
            else if (key == "clip-limit") base.clahe.clip_limit_rel = val.get<double>();
            else if (key == "mode") base.mode = parse_mode(val.get<std::string>());
            else if (key == "r-min") base.r_min = val.get<int>();
            else if (key == "r-max") base.r_max = val.get<int>();
            else if (key == "z-upsample") base.z_upsample = val.get<int>();
            else if (key == "dump-steps") base.dump_steps = val.get<bool>();
            else if (key == "threads") base.threads = val.get<unsigned>();
            else throw Error("unknown config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw Error(std::string("bad config value: ") + e.what());
    }
    return base;
}

PipelineConfig load_config_file(const fs::path& path, PipelineConfig base)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str(), base);
}

FrameStack enhance_stack(const FrameStack& stack, const ClaheParams& p, unsigned threads)
{
    FrameStack out;
    out.meta = stack.meta;
    out.frames.resize(stack.frames.size());
    parallel_for(stack.frames.size(), threads, [&](std::size_t k) {
        try {
            out.frames[k] = enhance(stack.frames[k], p);
        } catch (const Error& e) {
            throw Error("frame " + std::to_string(k) + ", stage enhance: " + e.what());
        }
    });
    return out;
}

StackSegmentation segment_stack(const FrameStack& enhanced, const SegmentParams& p,
                                unsigned threads)
{
    const auto n = enhanced.frames.size();
    std::vector<std::optional<SegmentationResult>> results(n);
    parallel_for(n, threads, [&](std::size_t k) {
        try {
            results[k] = segment_frame(enhanced.frames[k], p);
        } catch (const Error& e) {
            throw Error("frame " + std::to_string(k) + ", stage segment: " + e.what());
        }
    });

    StackSegmentation s;
    s.segmented.meta = enhanced.meta;
    s.masks.meta = enhanced.meta;
    s.masks.binary = true;
    const auto& m = enhanced.meta;
    for (std::size_t k = 0; k < n; ++k) {
        auto& r = results[k];
        if (r) {
            s.segmented.frames.push_back(std::move(r->segmented));
            s.masks.frames.push_back(to_frame(r->mask));
            if (r->circle) s.circles.emplace_back(static_cast<int>(k), *r->circle);
            s.segmented_indices.push_back(static_cast<int>(k));
        } else {
            s.segmented.frames.emplace_back(m.width, m.height);
            s.masks.frames.emplace_back(m.width, m.height);
        }
    }
    return s;
}

namespace {

Frame draw_points(Frame base, const Contour& c)
{
    for (const auto& p : c.points)
        if (base.contains(p.x, p.y)) base.at(p.x, p.y) = 255;
    return base;
}

// Outline of a mask: foreground pixels with a 4-neighbour outside it.
Frame draw_outline(Frame base, const Mask& m)
{
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            if (m.at(x, y) != kForeground) continue;
            const bool edge = x == 0 || y == 0 || x == m.width - 1 || y == m.height - 1 ||
                              m.at(x - 1, y) != kForeground || m.at(x + 1, y) != kForeground ||
                              m.at(x, y - 1) != kForeground || m.at(x, y + 1) != kForeground;
            if (edge) base.at(x, y) = 255;
        }
    return base;
}

} // namespace

StageImages trace_stages(const Frame& raw, const PipelineConfig& cfg)
{
    StageImages s;
    s.images[0] = square(log_compress(raw));
    s.images[1] = median3(s.images[0]);
    s.images[2] = clahe(s.images[1], cfg.clahe);
    const auto trace = segment_frame_traced(s.images[2], cfg.segment_params());
    s.images[3] = to_frame(trace.binary);
    s.images[4] = to_frame(trace.closed);
    const Frame blank(raw.width, raw.height);
    if (trace.result) {
        s.images[5] = draw_points(s.images[2], trace.result->target);
        s.images[6] = draw_outline(s.images[2], trace.result->mask);
        s.images[7] = trace.result->segmented;
    } else {
        s.images[5] = s.images[2];
        s.images[6] = s.images[2];
        s.images[7] = blank;
    }
    return s;
}

PipelineResult run_pipeline(const FrameStack& stack, const PipelineConfig& cfg)
{
    cfg.validate();
    stack.validate();
    PipelineResult r;
    const FrameStack enhanced = enhance_stack(stack, cfg.clahe, cfg.threads);
    r.segmentation = segment_stack(enhanced, cfg.segment_params(), cfg.threads);
    r.z_upsample = cfg.z_upsample > 0 ? cfg.z_upsample : default_z_upsample(stack.meta);
    if (!r.segmentation.segmented_indices.empty() && stack.frames.size() >= 2)
        r.volume = build_volume(r.segmentation.segmented, r.z_upsample, cfg.threads);
    return r;
}

void write_circles_csv(const std::vector<std::pair<int, CircleFit>>& circles,
                       const fs::path& path)
{
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "frame_index,cx,cy,r,votes\n";
    for (const auto& [k, c] : circles)
        out << k << ',' << c.cx << ',' << c.cy << ',' << c.r << ',' << c.votes << '\n';
}

std::vector<std::pair<int, CircleFit>> read_circles_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("missing file: " + path.string());
    std::vector<std::pair<int, CircleFit>> circles;
    std::string line;
    std::getline(in, line); // header
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int k;
        CircleFit c;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d", &k, &c.cx, &c.cy, &c.r, &c.votes) != 5)
            throw Error(path.string() + ":" + std::to_string(lineno) + ": malformed circle row");
        circles.emplace_back(k, c);
    }
    return circles;
}

void write_pipeline_outputs(const FrameStack& input, const PipelineResult& result,
                            const PipelineConfig& cfg, const fs::path& out_dir)
{
    fs::create_directories(out_dir);
    save_stack(result.segmentation.segmented, out_dir / "segmented", "segmented");
    save_stack(result.segmentation.masks, out_dir / "masks", "mask");
    write_circles_csv(result.segmentation.circles, out_dir / "circles.csv");

    if (cfg.dump_steps) {
        const fs::path steps = out_dir / "steps";
        fs::create_directories(steps);
        std::vector<StageImages> staged(input.frames.size());
        parallel_for(input.frames.size(), cfg.threads,
                     [&](std::size_t k) { staged[k] = trace_stages(input.frames[k], cfg); });
        for (std::size_t k = 0; k < staged.size(); ++k) {
            for (std::size_t s = 0; s < StageImages::names.size(); ++s) {
                char name[96];
                std::snprintf(name, sizeof name, "frame_%04zu_%s.png", k, StageImages::names[s]);
                write_png(staged[k].images[s], steps / name);
            }
        }
    }

    if (!result.volume) return;
    const Volume& v = *result.volume;
    save_volume(v, out_dir / "volume.raw");
    const fs::path renders = out_dir / "renders";
    fs::create_directories(renders);
    write_pgm(extract_slice(v, Axis::z, v.nz / 2), renders / "xy_slice.pgm");
    write_pgm(extract_slice(v, Axis::x, v.nx / 2), renders / "yz_slice.pgm");
    write_pgm(extract_slice(v, Axis::y, v.ny / 2), renders / "xz_slice.pgm");
    write_pgm(render_mip(v, Axis::z, cfg.threads), renders / "mip_z.pgm");
}

} // namespace usvol

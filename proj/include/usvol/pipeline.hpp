// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "usvol/enhance.hpp"
#include "usvol/frameio.hpp"
#include "usvol/reconstruct.hpp"
#include "usvol/segment.hpp"

namespace usvol {

struct PipelineConfig {
    int threshold = 49;
    ClaheParams clahe;
    SegmentMode mode = SegmentMode::circle;
    int r_min = 5;
    int r_max = 0;      // 0: floor(min(w, h) / 2)
    int z_upsample = 0; // 0: default_z_upsample(meta)
    bool dump_steps = false;
    unsigned threads = 1;

    void validate() const;
    SegmentParams segment_params() const;
};

/// Overlays keys present in the JSON object onto `base`. Keys use the CLI flag
/// spelling (e.g. "threshold", "clahe-tiles", "clip-limit", "mode").
PipelineConfig config_from_json(const std::string& json_text, PipelineConfig base = {});
PipelineConfig load_config_file(const std::filesystem::path& path, PipelineConfig base = {});

SegmentMode parse_mode(const std::string& s);
const char* mode_name(SegmentMode m);

FrameStack enhance_stack(const FrameStack& stack, const ClaheParams& p, unsigned threads = 1);

struct StackSegmentation {
    FrameStack segmented;
    FrameStack masks;
    std::vector<std::pair<int, CircleFit>> circles;
    std::vector<int> segmented_indices;
};

/// Frames without an interior contour contribute an all-zero image and mask.
StackSegmentation segment_stack(const FrameStack& enhanced, const SegmentParams& p,
                                unsigned threads = 1);

/// The eight per-frame stage images: log+square, median, CLAHE, threshold,
/// closing, target contour, fitted region outline, segmented frame.
struct StageImages {
    static constexpr std::array<const char*, 8> names{
        "b_log_square", "c_median", "d_clahe", "e_threshold",
        "f_closed", "g_contour", "h_fit", "i_segmented"};
    std::array<Frame, 8> images;
};

StageImages trace_stages(const Frame& raw, const PipelineConfig& cfg);

struct PipelineResult {
    StackSegmentation segmentation;
    int z_upsample = 1;
    /// Unset when no frame was segmented.
    std::optional<Volume> volume;
};

PipelineResult run_pipeline(const FrameStack& stack, const PipelineConfig& cfg);

/// Writes segmented/, masks/, circles.csv and, when a volume exists,
/// volume.raw + volume.json and renders/{xy,yz,xz}_slice.pgm, renders/mip_z.pgm.
/// Step images go to steps/ when cfg.dump_steps is set.
void write_pipeline_outputs(const FrameStack& input, const PipelineResult& result,
                            const PipelineConfig& cfg, const std::filesystem::path& out_dir);

void write_circles_csv(const std::vector<std::pair<int, CircleFit>>& circles,
                       const std::filesystem::path& path);
std::vector<std::pair<int, CircleFit>> read_circles_csv(const std::filesystem::path& path);

} // namespace usvol

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "usvol/frameio.hpp"
#include "usvol/segment.hpp"

namespace usvol {

struct FrameIoU {
    int frame_index = 0;
    double iou = 0.0;
};

struct IoUReport {
    std::vector<FrameIoU> per_frame;
    double mean_iou = 0.0;
    std::vector<int> sampled_indices;
};

/// |a & b| / |a | b|. Two empty masks score 1.0.
double iou(const Mask& a, const Mask& b);

/// Per-frame IoU on the sampled indices (in the given order) and their mean.
IoUReport mean_iou(const FrameStack& automatic, const FrameStack& reference,
                   std::span<const int> sample);

/// Parses "every:N" (0, N, 2N, ...), "evenly:K" (K indices spread over the
/// whole stack, ends included) or a comma separated index list.
std::vector<int> parse_sample_spec(const std::string& spec, int frame_count);

/// floor(i * (frame_count - 1) / (count - 1)) for i in [0, count).
std::vector<int> evenly_spaced(int frame_count, int count);

struct CenterlineFit {
    double slope_x = 0.0; // px per frame
    double slope_y = 0.0;
    double intercept_x = 0.0; // px
    double intercept_y = 0.0;
    /// sqrt(mean over points of (res_x^2 + res_y^2)).
    double rms_residual = 0.0;
};

/// Independent least-squares lines of cx and cy against frame index.
CenterlineFit centerline_fit(std::span<const std::pair<int, CircleFit>> circles);

void write_iou_csv(const IoUReport& report, std::ostream& out);
std::string centerline_json(const CenterlineFit& fit, int points);

} // namespace usvol

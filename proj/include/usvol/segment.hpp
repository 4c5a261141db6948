// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "usvol/image.hpp"

namespace usvol {

struct Point {
    int x = 0;
    int y = 0;
    friend bool operator==(const Point&, const Point&) = default;
};

/// Closed chain of pixel coordinates; consecutive points (cyclically) are
/// 8-neighbours.
struct Contour {
    std::vector<Point> points;

    /// Shoelace area of the polygon through the pixel centres.
    double area() const;
    bool touches_border(int width, int height) const;
};

struct CircleFit {
    int cx = 0;
    int cy = 0;
    int r = 0;
    int votes = 0;
    friend bool operator==(const CircleFit&, const CircleFit&) = default;
};

enum class SegmentMode { circle, contour };

struct SegmentParams {
    SegmentMode mode = SegmentMode::circle;
    int threshold = 49;
    int r_min = 5;
    /// <= 0 means floor(min(width, height) / 2).
    int r_max = 0;
};

struct SegmentationResult {
    SegmentMode mode = SegmentMode::circle;
    Contour target;
    std::optional<CircleFit> circle;
    Mask mask;
    Frame segmented;
};

/// 255 where pixel > t, else 0.
Mask threshold(const Frame& f, int t);

/// Single cross dilation/erosion; outside the frame is background.
Mask dilate_cross3(const Mask& m);
Mask erode_cross3(const Mask& m);
/// Dilation then erosion by the 5-pixel cross, as if the frame were surrounded
/// by unbounded background; the result is cropped to the frame.
Mask close_cross3(const Mask& m);

/// Outer border of every 8-connected foreground component, found by
/// Suzuki-Abe border following. Order follows the raster scan position of
/// each border's first pixel.
std::vector<Contour> find_contours(const Mask& m);

/// Largest-area contour with no point on the frame border. Ties go to the
/// contour whose first point is topmost, then leftmost.
std::optional<Contour> select_target_contour(std::span<const Contour> contours, int width,
                                             int height);

/// Unique integer offsets of the midpoint-circle rasterization of radius r.
std::vector<Point> circle_offsets(int r);

/// Circle Hough transform over integer (cx, cy, r) with cx in [0, width),
/// cy in [0, height), r in [r_min, r_max]. Every point votes for all centres
/// on its midpoint circle of radius r. Returns the global maximum; ties go to
/// smaller r, then smaller cy, then smaller cx.
CircleFit fit_circle_hough(std::span<const Point> points, int width, int height, int r_min,
                           int r_max);

/// Pixels with (x-cx)^2 + (y-cy)^2 <= r^2, clipped to the frame.
Mask fill_circle(const CircleFit& c, int width, int height);

/// Chain pixels plus pixel centres strictly inside the chain polygon
/// (even-odd rule).
Mask fill_contour(const Contour& c, int width, int height);

/// enhanced where region is 255, else 0.
Frame apply_mask(const Frame& enhanced, const Mask& region);

/// Every intermediate image of a single-frame segmentation.
struct SegmentationTrace {
    Mask binary;
    Mask closed;
    std::vector<Contour> contours;
    std::optional<SegmentationResult> result;
};

SegmentationTrace segment_frame_traced(const Frame& enhanced, const SegmentParams& p);

/// threshold -> close -> contours -> target; then a circle or filled-contour
/// mask applied to the enhanced frame. Empty when no interior contour exists.
std::optional<SegmentationResult> segment_frame(const Frame& enhanced, const SegmentParams& p);

} // namespace usvol

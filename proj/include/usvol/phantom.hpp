// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>

#include "usvol/frameio.hpp"

namespace usvol {

/// Slanted cylindrical tube imaged in cross-section while the probe moves
/// along Z. The tube axis lies in the Y-Z plane, tilted slant_deg from Z, so
/// the section centre drifts in +Y as frames advance.
struct TubePhantomParams {
    AcquisitionMeta meta{100, 128, 150, kDefaultPixelSpacingMm, kDefaultPixelSpacingMm,
                         kDefaultFrameSpacingMm};
    double tube_radius_mm = 4.0;
    double slant_deg = 0.0;
    /// Section centre in frame 0 (px). Unset: centred in X, and placed in Y so
    /// the drift path is centred vertically.
    std::optional<double> center0_x;
    std::optional<double> center0_y;
    double interior_mean = 140.0;
    double background_mean = 6.0;
    double speckle_scale = 0.35;
    std::uint64_t seed = 42;

    void validate() const;
};

/// Analytic cross-section of the tube in one frame: an axis-aligned ellipse.
struct TubeSection {
    double cx = 0.0;
    double cy = 0.0;
    double semi_x = 0.0; // px
    double semi_y = 0.0; // px

    bool contains(double x, double y) const;
};

TubeSection tube_section(const TubePhantomParams& p, int frame_index);

/// Y drift of the section centre in px per frame.
double tube_drift_per_frame(const TubePhantomParams& p);

struct PhantomStack {
    FrameStack frames;
    FrameStack masks;
};

/// Speckled frames plus exact ground-truth masks (pixel-centre inclusion).
PhantomStack synth_tube_stack(const TubePhantomParams& p, unsigned threads = 1);

/// Speckle field around `mean`: mean * (1 + speckle_scale * (R - sqrt(pi/2)))
/// with R Rayleigh-distributed of unit mode, clamped to [0, 255]. Pure
/// function of (seed, frame_index).
Frame synth_noise_frame(int width, int height, double mean, double speckle_scale,
                        std::uint64_t seed, int frame_index);

} // namespace usvol

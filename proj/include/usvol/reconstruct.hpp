// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>

#include "usvol/frameio.hpp"
#include "usvol/volume.hpp"

namespace usvol {

enum class Axis { x, y, z };

enum class RenderMode { mip, composite };

struct RenderParams {
    Axis axis = Axis::z;
    RenderMode mode = RenderMode::mip;
    double alpha_scale = 1.0;

    void validate() const;
};

/// round(frame_spacing_z / min(pixel_spacing_x, pixel_spacing_y)), at least 1.
int default_z_upsample(const AcquisitionMeta& meta);

/// Stacks frames along Z and inserts z_upsample - 1 planes between each pair
/// by linear interpolation along Z (the trilinear sample at in-plane lattice
/// points), rounded half up. Plane k * z_upsample is frame k verbatim.
Volume build_volume(const FrameStack& stack, int z_upsample, unsigned threads = 1);

/// Trilinear interpolation at real voxel coordinates inside the grid.
double trilinear_sample(const Volume& v, double x, double y, double z);

/// Z -> XY image (width nx, height ny); X -> YZ image (width ny, height nz);
/// Y -> XZ image (width nx, height nz).
Frame extract_slice(const Volume& v, Axis axis, int index);

/// Maximum along axis-aligned rays. Output layout matches extract_slice.
Frame render_mip(const Volume& v, Axis axis, unsigned threads = 1);

/// Front-to-back emission/absorption compositing along axis-aligned rays with
/// alpha = voxel / 255 * alpha_scale; rays stop once opacity reaches 0.999.
Frame render_composite(const Volume& v, const RenderParams& p, unsigned threads = 1);

/// Accumulated (colour, opacity) for one ray, in front-to-back order.
struct RayResult {
    double color = 0.0;
    double opacity = 0.0;
};
RayResult composite_ray(std::span<const std::uint8_t> samples, double alpha_scale);

int axis_extent(const Volume& v, Axis axis);
const char* axis_name(Axis axis);
Axis parse_axis(const std::string& s);

} // namespace usvol

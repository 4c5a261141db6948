// SPDX-License-Identifier: Apache-2.0
#include "usvol/reconstruct.hpp"

#include <algorithm>
#include <cmath>

#include "usvol/parallel.hpp"

namespace usvol {

void RenderParams::validate() const
{
    if (!(alpha_scale > 0.0 && alpha_scale <= 1.0))
        throw Error("alpha_scale must be in (0, 1]");
}

int default_z_upsample(const AcquisitionMeta& meta)
{
    const double pitch = std::min(meta.pixel_spacing_x, meta.pixel_spacing_y);
    return std::max(1, static_cast<int>(std::lround(meta.frame_spacing_z / pitch)));
}

Volume build_volume(const FrameStack& stack, int z_upsample, unsigned threads)
{
    if (stack.frames.size() < 2) throw Error("volume reconstruction needs at least 2 frames");
    if (z_upsample < 1) throw Error("z_upsample must be >= 1");
    stack.validate();

    const auto& m = stack.meta;
    const int nz = (m.frame_count - 1) * z_upsample + 1;
    Volume v(m.width, m.height, nz,
             {m.pixel_spacing_x, m.pixel_spacing_y, m.frame_spacing_z / z_upsample});
    const std::size_t plane = std::size_t(m.width) * m.height;
    const long long u = z_upsample;

    parallel_for(static_cast<std::size_t>(nz), threads, [&](std::size_t k) {
        const auto frame = static_cast<std::size_t>(k / z_upsample);
        const long long step = static_cast<long long>(k % z_upsample);
        auto* dst = v.data.data() + k * plane;
        const auto& a = stack.frames[frame].data;
        if (step == 0) {
            std::copy(a.begin(), a.end(), dst);
            return;
        }
        const auto& b = stack.frames[frame + 1].data;
        // round((a * (u - s) + b * s) / u), half up, in exact integer arithmetic.
        for (std::size_t i = 0; i < plane; ++i) {
            const long long num = a[i] * (u - step) + b[i] * step;
            dst[i] = static_cast<std::uint8_t>((2 * num + u) / (2 * u));
        }
    });
    return v;
}

double trilinear_sample(const Volume& v, double x, double y, double z)
{
    if (!(x >= 0.0 && y >= 0.0 && z >= 0.0 && x <= v.nx - 1 && y <= v.ny - 1 && z <= v.nz - 1))
        throw Error("trilinear sample outside the volume");
    const int x0 = std::min(static_cast<int>(x), std::max(v.nx - 2, 0));
    const int y0 = std::min(static_cast<int>(y), std::max(v.ny - 2, 0));
    const int z0 = std::min(static_cast<int>(z), std::max(v.nz - 2, 0));
    const int x1 = std::min(x0 + 1, v.nx - 1);
    const int y1 = std::min(y0 + 1, v.ny - 1);
    const int z1 = std::min(z0 + 1, v.nz - 1);
    const double dx = x - x0;
    const double dy = y - y0;
    const double dz = z - z0;

    const double c00 = v.at(x0, y0, z0) * (1 - dx) + v.at(x1, y0, z0) * dx;
    const double c10 = v.at(x0, y1, z0) * (1 - dx) + v.at(x1, y1, z0) * dx;
    const double c01 = v.at(x0, y0, z1) * (1 - dx) + v.at(x1, y0, z1) * dx;
    const double c11 = v.at(x0, y1, z1) * (1 - dx) + v.at(x1, y1, z1) * dx;
    const double c0 = c00 * (1 - dy) + c10 * dy;
    const double c1 = c01 * (1 - dy) + c11 * dy;
    return c0 * (1 - dz) + c1 * dz;
}

int axis_extent(const Volume& v, Axis axis)
{
    switch (axis) {
    case Axis::x: return v.nx;
    case Axis::y: return v.ny;
    case Axis::z: return v.nz;
    }
    return 0;
}

const char* axis_name(Axis axis)
{
    switch (axis) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
    }
    return "?";
}

Axis parse_axis(const std::string& s)
{
    if (s == "x" || s == "X") return Axis::x;
    if (s == "y" || s == "Y") return Axis::y;
    if (s == "z" || s == "Z") return Axis::z;
    throw Error("unknown axis '" + s + "' (expected x, y or z)");
}

namespace {

// Image plane of a projection along `axis`, and the voxel behind image pixel
// (u, w) at ray depth t.
struct Projection {
    const Volume& v;
    Axis axis;

    int width() const { return axis == Axis::x ? v.ny : v.nx; }
    int height() const { return axis == Axis::z ? v.ny : v.nz; }
    int depth() const { return axis_extent(v, axis); }

    std::uint8_t voxel(int u, int w, int t) const
    {
        switch (axis) {
        case Axis::z: return v.at(u, w, t);
        case Axis::x: return v.at(t, u, w);
        case Axis::y: return v.at(u, t, w);
        }
        return 0;
    }
};

template <typename RayFn>
Frame project(const Volume& v, Axis axis, unsigned threads, RayFn&& ray)
{
    if (v.empty()) throw Error("cannot render an empty volume");
    const Projection proj{v, axis};
    Frame out(proj.width(), proj.height());
    parallel_for(static_cast<std::size_t>(out.height), threads, [&](std::size_t row) {
        std::vector<std::uint8_t> samples(static_cast<std::size_t>(proj.depth()));
        const int w = static_cast<int>(row);
        for (int u = 0; u < out.width; ++u) {
            for (int t = 0; t < proj.depth(); ++t) samples[t] = proj.voxel(u, w, t);
            out.at(u, w) = ray(std::span<const std::uint8_t>(samples));
        }
    });
    return out;
}

} // namespace

Frame extract_slice(const Volume& v, Axis axis, int index)
{
    if (index < 0 || index >= axis_extent(v, axis))
        throw Error("slice index " + std::to_string(index) + " out of range for axis " +
                    axis_name(axis));
    const Projection proj{v, axis};
    Frame out(proj.width(), proj.height());
    for (int w = 0; w < out.height; ++w)
        for (int u = 0; u < out.width; ++u) out.at(u, w) = proj.voxel(u, w, index);
    return out;
}

Frame render_mip(const Volume& v, Axis axis, unsigned threads)
{
    return project(v, axis, threads, [](std::span<const std::uint8_t> s) {
        return *std::max_element(s.begin(), s.end());
    });
}

RayResult composite_ray(std::span<const std::uint8_t> samples, double alpha_scale)
{
    RayResult r;
    for (const auto s : samples) {
        const double alpha = s / 255.0 * alpha_scale;
        const double w = (1.0 - r.opacity) * alpha;
        r.color += w * s;
        r.opacity += w;
        if (r.opacity >= 0.999) break;
    }
    return r;
}

Frame render_composite(const Volume& v, const RenderParams& p, unsigned threads)
{
    p.validate();
    return project(v, p.axis, threads, [&](std::span<const std::uint8_t> s) {
        return clamp_u8(composite_ray(s, p.alpha_scale).color);
    });
}

} // namespace usvol

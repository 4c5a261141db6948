// SPDX-License-Identifier: Apache-2.0
#include "usvol/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "usvol/parallel.hpp"

namespace usvol {

namespace {

constexpr double kEdgeMarginPx = 2.0;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

// Independent stream per (seed, frame) so frames can be generated in any order.
std::mt19937_64 frame_rng(std::uint64_t seed, int frame_index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(frame_index)};
    return std::mt19937_64(seq);
}

// mean * (1 + scale * (R - E[R])) for R ~ Rayleigh(sigma = 1).
class Speckle {
public:
    Speckle(std::uint64_t seed, int frame_index) : rng_(frame_rng(seed, frame_index)) {}

    std::uint8_t draw(double mean, double scale)
    {
        const double u = uniform_(rng_);
        const double r = std::sqrt(-2.0 * std::log1p(-u));
        return clamp_u8(mean * (1.0 + scale * (r - kRayleighMean)));
    }

private:
    static constexpr double kRayleighMean = 1.2533141373155002; // sqrt(pi / 2)
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace

double tube_drift_per_frame(const TubePhantomParams& p)
{
    return std::tan(deg2rad(p.slant_deg)) * p.meta.frame_spacing_z / p.meta.pixel_spacing_y;
}

TubeSection tube_section(const TubePhantomParams& p, int frame_index)
{
    const auto& m = p.meta;
    const double drift = tube_drift_per_frame(p);
    const double cx0 = p.center0_x.value_or((m.width - 1) / 2.0);
    const double cy0 =
        p.center0_y.value_or((m.height - 1) / 2.0 - drift * (m.frame_count - 1) / 2.0);
    TubeSection s;
    s.cx = cx0;
    s.cy = cy0 + drift * frame_index;
    s.semi_x = p.tube_radius_mm / m.pixel_spacing_x;
    s.semi_y = p.tube_radius_mm / (std::cos(deg2rad(p.slant_deg)) * m.pixel_spacing_y);
    return s;
}

bool TubeSection::contains(double x, double y) const
{
    const double u = (x - cx) / semi_x;
    const double v = (y - cy) / semi_y;
    return u * u + v * v <= 1.0;
}

void TubePhantomParams::validate() const
{
    meta.validate();
    if (!(slant_deg >= 0.0 && slant_deg < 90.0)) throw Error("slant must be in [0, 90) degrees");
    if (!(tube_radius_mm > 0.0) || tube_radius_mm / std::max(meta.pixel_spacing_x, meta.pixel_spacing_y) < 1.0)
        throw Error("degenerate tube radius: must span at least 1 px");
    if (interior_mean < 0 || interior_mean > 255 || background_mean < 0 || background_mean > 255)
        throw Error("phantom means must be in [0, 255]");
    if (speckle_scale < 0) throw Error("speckle_scale must be >= 0");

    // Drift is linear, so the first and last frames bound the path.
    for (int k : {0, meta.frame_count - 1}) {
        const auto s = tube_section(*this, k);
        if (s.cx - s.semi_x < kEdgeMarginPx || s.cx + s.semi_x > meta.width - 1 - kEdgeMarginPx ||
            s.cy - s.semi_y < kEdgeMarginPx || s.cy + s.semi_y > meta.height - 1 - kEdgeMarginPx)
            throw Error("tube exits frame bounds at frame " + std::to_string(k) +
                        " (section centre " + std::to_string(s.cx) + ", " +
                        std::to_string(s.cy) + ")");
    }
}

Frame synth_noise_frame(int width, int height, double mean, double speckle_scale,
                        std::uint64_t seed, int frame_index)
{
    if (mean < 0 || mean > 255) throw Error("noise mean must be in [0, 255]");
    Frame f(width, height);
    Speckle speckle(seed, frame_index);
    for (auto& v : f.data) v = speckle.draw(mean, speckle_scale);
    return f;
}

PhantomStack synth_tube_stack(const TubePhantomParams& p, unsigned threads)
{
    p.validate();
    const auto& m = p.meta;
    PhantomStack out;
    out.frames.meta = m;
    out.masks.meta = m;
    out.masks.binary = true;
    out.frames.frames.resize(static_cast<std::size_t>(m.frame_count));
    out.masks.frames.resize(static_cast<std::size_t>(m.frame_count));

    parallel_for(static_cast<std::size_t>(m.frame_count), threads, [&](std::size_t k) {
        const auto section = tube_section(p, static_cast<int>(k));
        Frame f(m.width, m.height);
        Frame mask(m.width, m.height);
        Speckle speckle(p.seed, static_cast<int>(k));
        for (int y = 0; y < m.height; ++y) {
            for (int x = 0; x < m.width; ++x) {
                const bool inside = section.contains(x, y);
                f.at(x, y) =
                    speckle.draw(inside ? p.interior_mean : p.background_mean, p.speckle_scale);
                mask.at(x, y) = inside ? kForeground : kBackground;
            }
        }
        out.frames.frames[k] = std::move(f);
        out.masks.frames[k] = std::move(mask);
    });
    return out;
}

} // namespace usvol

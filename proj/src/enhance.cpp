// SPDX-License-Identifier: Apache-2.0
#include "usvol/enhance.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace usvol {

namespace {

using Lut = std::array<std::uint8_t, 256>;

const Lut& log_lut()
{
    // log2 keeps powers of two exact, so x = 15 lands on 127.5 and rounds up.
    static const Lut lut = [] {
        Lut t{};
        for (int x = 0; x < 256; ++x)
            t[x] = static_cast<std::uint8_t>(std::floor(255.0 * std::log2(1.0 + x) / 8.0 + 0.5));
        return t;
    }();
    return lut;
}

const Lut& square_lut()
{
    static const Lut lut = [] {
        Lut t{};
        for (int x = 0; x < 256; ++x) t[x] = static_cast<std::uint8_t>((2 * x * x + 255) / 510);
        return t;
    }();
    return lut;
}

Frame apply_lut(const Frame& f, const Lut& lut)
{
    Frame out(f.width, f.height);
    std::transform(f.data.begin(), f.data.end(), out.data.begin(),
                   [&](std::uint8_t v) { return lut[v]; });
    return out;
}

inline void sort2(std::uint8_t& a, std::uint8_t& b)
{
    const auto lo = std::min(a, b);
    b = std::max(a, b);
    a = lo;
}

// Paeth's 19-comparison median-of-9 network.
inline std::uint8_t median9(std::array<std::uint8_t, 9> p)
{
    sort2(p[1], p[2]); sort2(p[4], p[5]); sort2(p[7], p[8]);
    sort2(p[0], p[1]); sort2(p[3], p[4]); sort2(p[6], p[7]);
    sort2(p[1], p[2]); sort2(p[4], p[5]); sort2(p[7], p[8]);
    sort2(p[0], p[3]); sort2(p[5], p[8]); sort2(p[4], p[7]);
    sort2(p[3], p[6]); sort2(p[1], p[4]); sort2(p[2], p[5]);
    sort2(p[4], p[7]); sort2(p[4], p[2]); sort2(p[6], p[4]);
    sort2(p[4], p[2]);
    return p[4];
}

long long floor_div(long long a, long long b)
{
    long long q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

void ClaheParams::validate() const
{
    if (tiles_x < 1 || tiles_y < 1) throw Error("CLAHE tile counts must be >= 1");
    if (!(clip_limit_rel >= 1.0) || !std::isfinite(clip_limit_rel))
        throw Error("CLAHE clip limit must be >= 1.0");
}

Frame log_compress(const Frame& f) { return apply_lut(f, log_lut()); }

Frame square(const Frame& f) { return apply_lut(f, square_lut()); }

Frame median3(const Frame& f)
{
    Frame out(f.width, f.height);
    const int w = f.width;
    const int h = f.height;
    for (int y = 0; y < h; ++y) {
        const int ys[3] = {std::max(y - 1, 0), y, std::min(y + 1, h - 1)};
        for (int x = 0; x < w; ++x) {
            const int xs[3] = {std::max(x - 1, 0), x, std::min(x + 1, w - 1)};
            std::array<std::uint8_t, 9> win;
            int n = 0;
            for (int yy : ys)
                for (int xx : xs) win[n++] = f.at(xx, yy);
            out.at(x, y) = median9(win);
        }
    }
    return out;
}

Frame clahe(const Frame& f, const ClaheParams& p)
{
    p.validate();
    if (f.width < p.tiles_x || f.height < p.tiles_y)
        throw Error("CLAHE tile smaller than 1 px: frame " + std::to_string(f.width) + "x" +
                    std::to_string(f.height) + " with " + std::to_string(p.tiles_x) + "x" +
                    std::to_string(p.tiles_y) + " tiles");

    const int tw = (f.width + p.tiles_x - 1) / p.tiles_x;
    const int th = (f.height + p.tiles_y - 1) / p.tiles_y;
    const long long tile_pixels = static_cast<long long>(tw) * th;
    const auto clip = static_cast<long long>(std::ceil(p.clip_limit_rel * static_cast<double>(tile_pixels) / 256.0));

    std::vector<Lut> luts(static_cast<std::size_t>(p.tiles_x) * p.tiles_y);
    for (int ty = 0; ty < p.tiles_y; ++ty) {
        for (int tx = 0; tx < p.tiles_x; ++tx) {
            std::array<long long, 256> hist{};
            for (int y = ty * th; y < (ty + 1) * th; ++y) {
                const int sy = std::min(y, f.height - 1);
                for (int x = tx * tw; x < (tx + 1) * tw; ++x)
                    ++hist[f.at(std::min(x, f.width - 1), sy)];
            }

            long long excess = 0;
            for (auto& c : hist) {
                if (c > clip) {
                    excess += c - clip;
                    c = clip;
                }
            }
            const long long share = excess / 256;
            const long long rem = excess % 256;
            for (int b = 0; b < 256; ++b) hist[b] += share + (b < rem ? 1 : 0);

            auto& lut = luts[static_cast<std::size_t>(ty) * p.tiles_x + tx];
            long long cdf = 0;
            for (int b = 0; b < 256; ++b) {
                cdf += hist[b];
                lut[b] = static_cast<std::uint8_t>((510 * cdf + tile_pixels) / (2 * tile_pixels));
            }
        }
    }

    // Bilinear blend in exact integer arithmetic. A pixel's position in tile
    // units relative to tile centres is (2x + 1 - tw) / (2 tw).
    const long long den_x = 2LL * tw;
    const long long den_y = 2LL * th;
    const long long den = den_x * den_y;
    Frame out(f.width, f.height);
    for (int y = 0; y < f.height; ++y) {
        const long long ny = 2LL * y + 1 - th;
        const long long fy = floor_div(ny, den_y);
        const long long wy = ny - fy * den_y;
        const int y0 = static_cast<int>(std::clamp<long long>(fy, 0, p.tiles_y - 1));
        const int y1 = static_cast<int>(std::clamp<long long>(fy + 1, 0, p.tiles_y - 1));
        for (int x = 0; x < f.width; ++x) {
            const long long nx = 2LL * x + 1 - tw;
            const long long fx = floor_div(nx, den_x);
            const long long wx = nx - fx * den_x;
            const int x0 = static_cast<int>(std::clamp<long long>(fx, 0, p.tiles_x - 1));
            const int x1 = static_cast<int>(std::clamp<long long>(fx + 1, 0, p.tiles_x - 1));
            const auto v = f.at(x, y);
            const long long top = (den_x - wx) * luts[y0 * p.tiles_x + x0][v] +
                                  wx * luts[y0 * p.tiles_x + x1][v];
            const long long bottom = (den_x - wx) * luts[y1 * p.tiles_x + x0][v] +
                                     wx * luts[y1 * p.tiles_x + x1][v];
            const long long num = (den_y - wy) * top + wy * bottom;
            out.at(x, y) = static_cast<std::uint8_t>((2 * num + den) / (2 * den));
        }
    }
    return out;
}

Frame enhance(const Frame& f, const ClaheParams& p)
{
    return clahe(median3(square(log_compress(f))), p);
}

} // namespace usvol

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace usvol {

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 8-bit single-channel image stored row-major. The tag parameter keeps
/// intensity frames and binary masks from being mixed up at call sites.
template <typename Tag>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(checked_size(w, h), fill)
    {
    }

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }

    std::uint8_t& at(int x, int y) { return data[index(x, y)]; }
    std::uint8_t at(int x, int y) const { return data[index(x, y)]; }

    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
    bool same_shape(int w, int h) const { return width == w && height == h; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    static std::size_t checked_size(int w, int h)
    {
        if (w < 1 || h < 1)
            throw Error("image dimensions must be positive, got " + std::to_string(w) + "x" +
                        std::to_string(h));
        return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    }
};

struct FrameTag {};
struct MaskTag {};

/// Grayscale intensity frame.
using Frame = Image<FrameTag>;
/// Binary mask; only 0 and 255 occur.
using Mask = Image<MaskTag>;

inline constexpr std::uint8_t kForeground = 255;
inline constexpr std::uint8_t kBackground = 0;

/// Reinterpret a frame as a mask. Throws if any value other than 0/255 occurs.
Mask to_mask(const Frame& f);
/// Mask viewed as a frame (lossless).
Frame to_frame(const Mask& m);

/// Integer round-half-up of a non-negative real.
inline int round_half_up(double v) { return static_cast<int>(v + 0.5); }

inline std::uint8_t clamp_u8(double v)
{
    if (v <= 0.0) return 0;
    if (v >= 255.0) return 255;
    return static_cast<std::uint8_t>(round_half_up(v));
}

} // namespace usvol

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "usvol/image.hpp"

namespace usvol {

/// 3D 8-bit voxel grid. X = lateral, Y = depth, Z = elevation (probe travel).
/// Storage is X-fastest, then Y, then Z.
struct Volume {
    int nx = 0;
    int ny = 0;
    int nz = 0;
    std::array<double, 3> spacing{1.0, 1.0, 1.0}; // mm per voxel
    std::vector<std::uint8_t> data;

    Volume() = default;
    Volume(int x, int y, int z, std::array<double, 3> sp, std::uint8_t fill = 0);

    std::size_t index(int x, int y, int z) const
    {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(ny) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(nx) +
               static_cast<std::size_t>(x);
    }
    std::uint8_t& at(int x, int y, int z) { return data[index(x, y, z)]; }
    std::uint8_t at(int x, int y, int z) const { return data[index(x, y, z)]; }

    bool empty() const { return data.empty(); }

    /// Throws Error if dims < 1, spacings not positive, or data size is wrong.
    void validate() const;

    friend bool operator==(const Volume&, const Volume&) = default;
};

} // namespace usvol

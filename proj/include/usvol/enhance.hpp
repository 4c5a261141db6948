// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "usvol/image.hpp"

namespace usvol {

struct ClaheParams {
    int tiles_x = 8;
    int tiles_y = 8;
    /// Clip limit as a multiple of the mean bin height (tile_pixels / 256).
    double clip_limit_rel = 2.0;

    void validate() const;
};

/// out = round(255 * ln(1 + x) / ln(256)).
Frame log_compress(const Frame& f);

/// out = round(x^2 / 255).
Frame square(const Frame& f);

/// 3x3 median with edge replication at the borders.
Frame median3(const Frame& f);

/// Contrast limited adaptive histogram equalization.
///
/// The frame is split into tiles_x * tiles_y tiles of ceil(W/tiles_x) by
/// ceil(H/tiles_y) pixels. Tiles that overhang the right/bottom edge read
/// replicated edge pixels, so every tile has the same pixel count. Each tile's
/// 256-bin histogram is clipped at ceil(clip_limit_rel * tile_pixels / 256);
/// the clipped excess is spread evenly over all bins in one pass and the
/// remainder goes one count each to the lowest bins. The tile lookup table is
/// round(255 * cdf / tile_pixels), and output pixels blend the four nearest
/// tile tables bilinearly by distance to tile centers.
Frame clahe(const Frame& f, const ClaheParams& p = {});

/// clahe(median3(square(log_compress(f))), p).
Frame enhance(const Frame& f, const ClaheParams& p = {});

} // namespace usvol

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "usvol/image.hpp"
#include "usvol/volume.hpp"

namespace usvol {

inline constexpr double kDefaultPixelSpacingMm = 0.3;
/// 120 mm of track travel over 150 acquired frames.
inline constexpr double kDefaultFrameSpacingMm = 0.8;

struct AcquisitionMeta {
    int width = 0;
    int height = 0;
    int frame_count = 0;
    double pixel_spacing_x = kDefaultPixelSpacingMm;
    double pixel_spacing_y = kDefaultPixelSpacingMm;
    double frame_spacing_z = kDefaultFrameSpacingMm;

    /// Throws Error when a dimension is < 1 or a spacing is not finite and positive.
    void validate() const;

    friend bool operator==(const AcquisitionMeta&, const AcquisitionMeta&) = default;
};

/// Ordered frames with their acquisition geometry.
struct FrameStack {
    AcquisitionMeta meta;
    std::vector<Frame> frames;
    /// Set by load_masks; every value is 0 or 255.
    bool binary = false;

    /// Checks meta plus per-frame dimensions and count.
    void validate() const;
};

// Single images. Format is chosen from the extension (.pgm or .png).
Frame read_image(const std::filesystem::path& path);
void write_image(const Frame& f, const std::filesystem::path& path);
inline void write_image(const Mask& m, const std::filesystem::path& path)
{
    write_image(to_frame(m), path);
}

Frame read_pgm(const std::filesystem::path& path);
void write_pgm(const Frame& f, const std::filesystem::path& path);
Frame read_png(const std::filesystem::path& path);
void write_png(const Frame& f, const std::filesystem::path& path);

/// Loads a stack from a JSON manifest. When the manifest has no "frames"
/// list, every .pgm/.png file next to it is loaded in lexicographic order.
FrameStack load_stack(const std::filesystem::path& manifest_path);

/// Like load_stack but additionally requires every pixel to be 0 or 255.
FrameStack load_masks(const std::filesystem::path& manifest_path);

/// Writes `<dir>/<prefix>_NNNN.pgm` per frame plus `<dir>/manifest.json`
/// listing them. Returns the manifest path.
std::filesystem::path save_stack(const FrameStack& stack, const std::filesystem::path& dir,
                                 const std::string& prefix = "frame");

/// Raw X-fastest uint8 payload at `raw_path` plus a JSON sidecar at
/// `raw_path` with extension replaced by ".json".
void save_volume(const Volume& v, const std::filesystem::path& raw_path);
Volume load_volume(const std::filesystem::path& raw_path);

std::filesystem::path volume_sidecar_path(const std::filesystem::path& raw_path);

} // namespace usvol

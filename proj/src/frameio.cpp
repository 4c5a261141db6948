// SPDX-License-Identifier: Apache-2.0
#include "usvol/frameio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace usvol {

Mask to_mask(const Frame& f)
{
    Mask m(f.width, f.height);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const auto v = f.data[i];
        if (v != kBackground && v != kForeground) {
            const auto x = static_cast<int>(i % static_cast<std::size_t>(f.width));
            const auto y = static_cast<int>(i / static_cast<std::size_t>(f.width));
            throw Error("non-binary value " + std::to_string(v) + " at (" + std::to_string(x) +
                        ", " + std::to_string(y) + ")");
        }
        m.data[i] = v;
    }
    return m;
}

Frame to_frame(const Mask& m)
{
    Frame f(m.width, m.height);
    f.data = m.data;
    return f;
}

Volume::Volume(int x, int y, int z, std::array<double, 3> sp, std::uint8_t fill)
    : nx(x), ny(y), nz(z), spacing(sp)
{
    if (x < 1 || y < 1 || z < 1) throw Error("volume dimensions must be positive");
    data.assign(static_cast<std::size_t>(x) * static_cast<std::size_t>(y) *
                    static_cast<std::size_t>(z),
                fill);
}

void Volume::validate() const
{
    if (nx < 1 || ny < 1 || nz < 1) throw Error("volume dimensions must be positive");
    for (double s : spacing)
        if (!(std::isfinite(s) && s > 0.0)) throw Error("volume spacing must be positive");
    if (data.size() != static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                           static_cast<std::size_t>(nz))
        throw Error("volume payload size does not match dimensions");
}

void AcquisitionMeta::validate() const
{
    if (width < 1 || height < 1 || frame_count < 1)
        throw Error("width, height and frame_count must be >= 1");
    for (double s : {pixel_spacing_x, pixel_spacing_y, frame_spacing_z})
        if (!(std::isfinite(s) && s > 0.0)) throw Error("spacings must be finite and > 0");
}

void FrameStack::validate() const
{
    meta.validate();
    if (static_cast<int>(frames.size()) != meta.frame_count)
        throw Error("frame_count mismatch: manifest declares " + std::to_string(meta.frame_count) +
                    ", found " + std::to_string(frames.size()) + " frames");
    for (std::size_t k = 0; k < frames.size(); ++k) {
        const auto& f = frames[k];
        if (!f.same_shape(meta.width, meta.height) || f.size() != f.data.size() ||
            f.data.size() != static_cast<std::size_t>(meta.width) *
                                 static_cast<std::size_t>(meta.height))
            throw Error("frame " + std::to_string(k) + " is " + std::to_string(f.width) + "x" +
                        std::to_string(f.height) + ", expected " + std::to_string(meta.width) +
                        "x" + std::to_string(meta.height));
    }
}

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval <= 255)

namespace {

std::string lower_ext(const fs::path& p)
{
    auto e = p.extension().string();
    std::transform(e.begin(), e.end(), e.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return e;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in)
{
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

int parse_positive(const std::string& tok, const fs::path& path, const char* what)
{
    try {
        std::size_t used = 0;
        int v = std::stoi(tok, &used);
        if (used == tok.size() && v > 0) return v;
    } catch (const std::exception&) {
    }
    throw Error(path.string() + ": bad PGM " + what + " '" + tok + "'");
}

} // namespace

Frame read_pgm(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    const auto magic = pgm_token(in);
    if (magic == "P6" || magic == "P3")
        throw Error(path.string() + ": non-grayscale input (PPM)");
    if (magic != "P5") throw Error(path.string() + ": not a binary PGM (P5) file");
    const int w = parse_positive(pgm_token(in), path, "width");
    const int h = parse_positive(pgm_token(in), path, "height");
    const int maxval = parse_positive(pgm_token(in), path, "maxval");
    if (maxval > 255) throw Error(path.string() + ": only 8-bit PGM is supported");
    Frame f(w, h);
    in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.size()));
    if (in.gcount() != static_cast<std::streamsize>(f.size()))
        throw Error(path.string() + ": truncated PGM payload");
    return f;
}

void write_pgm(const Frame& f, const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "P5\n" << f.width << ' ' << f.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(f.data.data()), static_cast<std::streamsize>(f.size()));
    if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PNG (8-bit grayscale via the libpng simplified API)

Frame read_png(const fs::path& path)
{
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw Error(path.string() + ": " + img.message);
    if (img.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_ALPHA)) {
        png_image_free(&img);
        throw Error(path.string() + ": non-grayscale input (PNG has color or alpha channels)");
    }
    img.format = PNG_FORMAT_GRAY;
    Frame f(static_cast<int>(img.width), static_cast<int>(img.height));
    if (!png_image_finish_read(&img, nullptr, f.data.data(), 0, nullptr))
        throw Error(path.string() + ": " + img.message);
    return f;
}

void write_png(const Frame& f, const fs::path& path)
{
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(f.width);
    img.height = static_cast<png_uint_32>(f.height);
    img.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&img, path.c_str(), 0, f.data.data(), 0, nullptr))
        throw Error("cannot write " + path.string() + ": " + img.message);
}

Frame read_image(const fs::path& path)
{
    if (!fs::exists(path)) throw Error("missing file: " + path.string());
    const auto ext = lower_ext(path);
    if (ext == ".pgm") return read_pgm(path);
    if (ext == ".png") return read_png(path);
    throw Error(path.string() + ": unsupported image extension (expected .pgm or .png)");
}

void write_image(const Frame& f, const fs::path& path)
{
    const auto ext = lower_ext(path);
    if (ext == ".png")
        write_png(f, path);
    else
        write_pgm(f, path);
}

// ---------------------------------------------------------------------------
// Manifests

namespace {

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("missing file: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(path.string() + ": malformed JSON: " + e.what());
    }
}

double spacing_or(const json& j, const char* key, double fallback)
{
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw Error(std::string("manifest field '") + key + "' must be a number");
    return j[key].get<double>();
}

int required_int(const json& j, const char* key)
{
    if (!j.contains(key) || !j[key].is_number_integer())
        throw Error(std::string("manifest is missing integer field '") + key + "'");
    return j[key].get<int>();
}

} // namespace

FrameStack load_stack(const fs::path& manifest_path)
{
    const json j = read_json(manifest_path);
    if (!j.is_object()) throw Error(manifest_path.string() + ": manifest must be a JSON object");

    FrameStack stack;
    auto& m = stack.meta;
    m.width = required_int(j, "width");
    m.height = required_int(j, "height");
    m.frame_count = required_int(j, "frame_count");
    m.pixel_spacing_x = spacing_or(j, "pixel_spacing_x_mm", kDefaultPixelSpacingMm);
    m.pixel_spacing_y = spacing_or(j, "pixel_spacing_y_mm", kDefaultPixelSpacingMm);
    m.frame_spacing_z = spacing_or(j, "frame_spacing_z_mm", kDefaultFrameSpacingMm);
    m.validate();

    const fs::path base = manifest_path.parent_path();
    std::vector<fs::path> files;
    if (j.contains("frames")) {
        if (!j["frames"].is_array()) throw Error("manifest 'frames' must be an array of paths");
        for (const auto& e : j["frames"]) files.push_back(base / e.get<std::string>());
    } else {
        for (const auto& entry : fs::directory_iterator(base.empty() ? fs::path(".") : base)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = lower_ext(entry.path());
            if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) {
                      return a.filename().string() < b.filename().string();
                  });
    }
    if (static_cast<int>(files.size()) != m.frame_count)
        throw Error("frame_count mismatch: manifest declares " + std::to_string(m.frame_count) +
                    ", found " + std::to_string(files.size()) + " frame files");

    stack.frames.reserve(files.size());
    for (std::size_t k = 0; k < files.size(); ++k) {
        Frame f = read_image(files[k]);
        if (!f.same_shape(m.width, m.height))
            throw Error("dimension mismatch: frame " + std::to_string(k) + " (" +
                        files[k].filename().string() + ") is " + std::to_string(f.width) + "x" +
                        std::to_string(f.height) + ", manifest declares " +
                        std::to_string(m.width) + "x" + std::to_string(m.height));
        stack.frames.push_back(std::move(f));
    }
    return stack;
}

FrameStack load_masks(const fs::path& manifest_path)
{
    FrameStack stack = load_stack(manifest_path);
    for (std::size_t k = 0; k < stack.frames.size(); ++k) {
        const auto& f = stack.frames[k];
        for (int y = 0; y < f.height; ++y)
            for (int x = 0; x < f.width; ++x) {
                const auto v = f.at(x, y);
                if (v != kBackground && v != kForeground)
                    throw Error("non-binary mask value " + std::to_string(v) + " in frame " +
                                std::to_string(k) + " at (" + std::to_string(x) + ", " +
                                std::to_string(y) + ")");
            }
    }
    stack.binary = true;
    return stack;
}

fs::path save_stack(const FrameStack& stack, const fs::path& dir, const std::string& prefix)
{
    stack.validate();
    fs::create_directories(dir);
    json j;
    j["width"] = stack.meta.width;
    j["height"] = stack.meta.height;
    j["frame_count"] = stack.meta.frame_count;
    j["pixel_spacing_x_mm"] = stack.meta.pixel_spacing_x;
    j["pixel_spacing_y_mm"] = stack.meta.pixel_spacing_y;
    j["frame_spacing_z_mm"] = stack.meta.frame_spacing_z;
    json names = json::array();
    for (std::size_t k = 0; k < stack.frames.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%04zu.pgm", prefix.c_str(), k);
        write_pgm(stack.frames[k], dir / name);
        names.push_back(name);
    }
    j["frames"] = std::move(names);
    const fs::path manifest = dir / "manifest.json";
    std::ofstream out(manifest);
    if (!out) throw Error("cannot write " + manifest.string());
    out << j.dump(2) << '\n';
    return manifest;
}

// ---------------------------------------------------------------------------
// Volumes

fs::path volume_sidecar_path(const fs::path& raw_path)
{
    fs::path p = raw_path;
    p.replace_extension(".json");
    if (p == raw_path) p += ".json";
    return p;
}

void save_volume(const Volume& v, const fs::path& raw_path)
{
    v.validate();
    {
        std::ofstream out(raw_path, std::ios::binary);
        if (!out) throw Error("cannot write " + raw_path.string());
        out.write(reinterpret_cast<const char*>(v.data.data()),
                  static_cast<std::streamsize>(v.data.size()));
        if (!out) throw Error("write failed: " + raw_path.string());
    }
    json j;
    j["dims"] = {v.nx, v.ny, v.nz};
    j["spacing_mm"] = {v.spacing[0], v.spacing[1], v.spacing[2]};
    j["dtype"] = "uint8";
    j["order"] = "x-fastest";
    j["payload"] = raw_path.filename().string();
    const auto sidecar = volume_sidecar_path(raw_path);
    std::ofstream out(sidecar);
    if (!out) throw Error("cannot write " + sidecar.string());
    out << j.dump(2) << '\n';
}

Volume load_volume(const fs::path& raw_path)
{
    const json j = read_json(volume_sidecar_path(raw_path));
    if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].size() != 3)
        throw Error("volume sidecar needs dims:[X,Y,Z]");
    if (!j.contains("spacing_mm") || !j["spacing_mm"].is_array() || j["spacing_mm"].size() != 3)
        throw Error("volume sidecar needs spacing_mm:[sx,sy,sz]");
    Volume v(j["dims"][0].get<int>(), j["dims"][1].get<int>(), j["dims"][2].get<int>(),
             {j["spacing_mm"][0].get<double>(), j["spacing_mm"][1].get<double>(),
              j["spacing_mm"][2].get<double>()});
    std::ifstream in(raw_path, std::ios::binary);
    if (!in) throw Error("missing file: " + raw_path.string());
    in.read(reinterpret_cast<char*>(v.data.data()), static_cast<std::streamsize>(v.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(v.data.size()) || in.peek() != EOF)
        throw Error(raw_path.string() + ": payload size does not match sidecar dims");
    v.validate();
    return v;
}

} // namespace usvol

// SPDX-License-Identifier: Apache-2.0
#include "usvol/evaluate.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace usvol {

double iou(const Mask& a, const Mask& b)
{
    if (!a.same_shape(b.width, b.height))
        throw Error("iou: mask dimensions differ (" + std::to_string(a.width) + "x" +
                    std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                    std::to_string(b.height) + ")");
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool fa = a.data[i] == kForeground;
        const bool fb = b.data[i] == kForeground;
        inter += fa && fb;
        uni += fa || fb;
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

IoUReport mean_iou(const FrameStack& automatic, const FrameStack& reference,
                   std::span<const int> sample)
{
    if (automatic.frames.size() != reference.frames.size())
        throw Error("stack length mismatch: " + std::to_string(automatic.frames.size()) + " vs " +
                    std::to_string(reference.frames.size()) + " frames");
    if (sample.empty()) throw Error("mean_iou needs at least one sampled index");
    IoUReport report;
    double sum = 0.0;
    for (const int k : sample) {
        if (k < 0 || k >= static_cast<int>(automatic.frames.size()))
            throw Error("sample index " + std::to_string(k) + " out of range");
        const double v = iou(to_mask(automatic.frames[k]), to_mask(reference.frames[k]));
        report.per_frame.push_back({k, v});
        report.sampled_indices.push_back(k);
        sum += v;
    }
    report.mean_iou = sum / static_cast<double>(sample.size());
    return report;
}

std::vector<int> evenly_spaced(int frame_count, int count)
{
    if (frame_count < 1 || count < 1) throw Error("evenly spaced sampling needs positive counts");
    if (count > frame_count)
        throw Error("cannot take " + std::to_string(count) + " distinct samples from " +
                    std::to_string(frame_count) + " frames");
    if (count == 1) return {0};
    std::vector<int> idx;
    for (int i = 0; i < count; ++i)
        idx.push_back(static_cast<int>(static_cast<long long>(i) * (frame_count - 1) / (count - 1)));
    return idx;
}

std::vector<int> parse_sample_spec(const std::string& spec, int frame_count)
{
    auto positive = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used == s.size() && v > 0) return v;
        } catch (const std::exception&) {
        }
        throw Error("bad sample spec '" + spec + "'");
    };
    if (spec.rfind("every:", 0) == 0) {
        const int step = positive(spec.substr(6));
        std::vector<int> idx;
        for (int k = 0; k < frame_count; k += step) idx.push_back(k);
        return idx;
    }
    if (spec.rfind("evenly:", 0) == 0) return evenly_spaced(frame_count, positive(spec.substr(7)));

    std::vector<int> idx;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(item, &used);
            if (used != item.size()) throw Error("");
            idx.push_back(v);
        } catch (const std::exception&) {
            throw Error("bad sample spec '" + spec + "'");
        }
    }
    if (idx.empty()) throw Error("empty sample spec");
    for (int k : idx)
        if (k < 0 || k >= frame_count)
            throw Error("sample index " + std::to_string(k) + " out of range");
    return idx;
}

namespace {

struct Line {
    double slope;
    double intercept;
};

Line least_squares(std::span<const double> t, std::span<const double> v)
{
    const double n = static_cast<double>(t.size());
    double mt = 0, mv = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        mt += t[i];
        mv += v[i];
    }
    mt /= n;
    mv /= n;
    double stt = 0, stv = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        stt += (t[i] - mt) * (t[i] - mt);
        stv += (t[i] - mt) * (v[i] - mv);
    }
    if (!(stt > 0)) throw Error("centerline fit needs circles from at least 2 distinct frames");
    const double slope = stv / stt;
    return {slope, mv - slope * mt};
}

} // namespace

CenterlineFit centerline_fit(std::span<const std::pair<int, CircleFit>> circles)
{
    if (circles.size() < 2) throw Error("centerline fit needs at least 2 circles");
    std::vector<double> t, xs, ys;
    for (const auto& [k, c] : circles) {
        t.push_back(k);
        xs.push_back(c.cx);
        ys.push_back(c.cy);
    }
    const Line lx = least_squares(t, xs);
    const Line ly = least_squares(t, ys);
    double ss = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double rx = xs[i] - (lx.slope * t[i] + lx.intercept);
        const double ry = ys[i] - (ly.slope * t[i] + ly.intercept);
        ss += rx * rx + ry * ry;
    }
    return {lx.slope, ly.slope, lx.intercept, ly.intercept,
            std::sqrt(ss / static_cast<double>(t.size()))};
}

void write_iou_csv(const IoUReport& report, std::ostream& out)
{
    char buf[64];
    out << "frame_index,iou\n";
    for (const auto& e : report.per_frame) {
        std::snprintf(buf, sizeof buf, "%d,%.6f\n", e.frame_index, e.iou);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "mean,%.6f\n", report.mean_iou);
    out << buf;
}

std::string centerline_json(const CenterlineFit& fit, int points)
{
    nlohmann::ordered_json j;
    j["points"] = points;
    j["slope_px_per_frame"] = {fit.slope_x, fit.slope_y};
    j["intercept_px"] = {fit.intercept_x, fit.intercept_y};
    j["rms_residual_px"] = fit.rms_residual;
    return j.dump(2);
}

} // namespace usvol

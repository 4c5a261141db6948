// SPDX-License-Identifier: Apache-2.0
#include "usvol/segment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace usvol {

double Contour::area() const
{
    const std::size_t n = points.size();
    if (n < 3) return 0.0;
    long long twice = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = points[i];
        const auto& b = points[(i + 1) % n];
        twice += static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
    }
    return std::abs(static_cast<double>(twice)) / 2.0;
}

bool Contour::touches_border(int width, int height) const
{
    return std::any_of(points.begin(), points.end(), [&](const Point& p) {
        return p.x == 0 || p.y == 0 || p.x == width - 1 || p.y == height - 1;
    });
}

Mask threshold(const Frame& f, int t)
{
    if (t < 0 || t > 255) throw Error("threshold must be in [0, 255]");
    Mask m(f.width, f.height);
    std::transform(f.data.begin(), f.data.end(), m.data.begin(),
                   [t](std::uint8_t v) { return v > t ? kForeground : kBackground; });
    return m;
}

namespace {

constexpr int kCross[5][2] = {{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};

// Dilation (any) or erosion (all) by the cross; out of bounds is background.
Mask cross_op(const Mask& m, bool dilate)
{
    Mask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            bool hit = !dilate;
            for (const auto& d : kCross) {
                const int xx = x + d[0];
                const int yy = y + d[1];
                const bool fg = m.contains(xx, yy) && m.at(xx, yy) == kForeground;
                if (dilate && fg) {
                    hit = true;
                    break;
                }
                if (!dilate && !fg) {
                    hit = false;
                    break;
                }
            }
            out.at(x, y) = hit ? kForeground : kBackground;
        }
    }
    return out;
}

} // namespace

Mask dilate_cross3(const Mask& m) { return cross_op(m, true); }
Mask erode_cross3(const Mask& m) { return cross_op(m, false); }
// Closing on the unbounded plane, cropped back to the frame. Closing inside the
// frame alone would erode away border pixels and stop being extensive.
Mask close_cross3(const Mask& m)
{
    Mask padded(m.width + 2, m.height + 2);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) padded.at(x + 1, y + 1) = m.at(x, y);
    const auto closed = erode_cross3(dilate_cross3(padded));
    Mask out(m.width, m.height);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) out.at(x, y) = closed.at(x + 1, y + 1);
    return out;
}

// ---------------------------------------------------------------------------
// Suzuki-Abe border following (8-connectivity).
//
// Works on a label image padded with one ring of zeros. Labels: 0 background,
// 1 unvisited foreground, +/-NBD for pixels on border NBD. Hole borders are
// traced too, since their labels stop the scan from mistaking pixels to the
// right of a hole for new outer borders, but only outer borders are returned.

namespace {

// Neighbour offsets in counter-clockwise order on screen (y grows downward),
// starting East.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

int direction_of(int dx, int dy)
{
    for (int d = 0; d < 8; ++d)
        if (kDx[d] == dx && kDy[d] == dy) return d;
    return -1;
}

class BorderTracer {
public:
    explicit BorderTracer(const Mask& m) : w_(m.width + 2), h_(m.height + 2), f_(std::size_t(w_) * h_, 0)
    {
        for (int y = 0; y < m.height; ++y)
            for (int x = 0; x < m.width; ++x)
                if (m.at(x, y) == kForeground) f_[idx(x + 1, y + 1)] = 1;
    }

    std::vector<Contour> run()
    {
        std::vector<Contour> outer;
        int nbd = 1;
        for (int i = 1; i < h_ - 1; ++i) {
            for (int j = 1; j < w_ - 1; ++j) {
                const int v = f_[idx(j, i)];
                if (v == 1 && f_[idx(j - 1, i)] == 0) {
                    ++nbd;
                    outer.push_back(follow(j, i, j - 1, i, nbd));
                } else if (v >= 1 && f_[idx(j + 1, i)] == 0) {
                    ++nbd;
                    follow(j, i, j + 1, i, nbd);
                }
            }
        }
        return outer;
    }

private:
    std::size_t idx(int x, int y) const { return std::size_t(y) * w_ + x; }

    // Traces the border starting at (x, y) whose background neighbour is
    // (bx, by). Returned points are in unpadded coordinates.
    Contour follow(int x, int y, int bx, int by, int nbd)
    {
        Contour c;
        const int start_dir = direction_of(bx - x, by - y);

        // Clockwise search from the background neighbour for a nonzero pixel.
        int d1 = -1;
        for (int k = 0; k < 8; ++k) {
            const int d = (start_dir - k + 8) % 8;
            if (f_[idx(x + kDx[d], y + kDy[d])] != 0) {
                d1 = d;
                break;
            }
        }
        if (d1 < 0) {
            f_[idx(x, y)] = -nbd;
            c.points.push_back({x - 1, y - 1});
            return c;
        }

        const int x1 = x + kDx[d1];
        const int y1 = y + kDy[d1];
        int x2 = x1, y2 = y1; // previous pixel
        int x3 = x, y3 = y;   // current pixel
        for (;;) {
            c.points.push_back({x3 - 1, y3 - 1});
            // Counter-clockwise search around (x3, y3), starting just after (x2, y2).
            const int from = direction_of(x2 - x3, y2 - y3);
            bool east_zero_examined = false;
            int x4 = x3, y4 = y3;
            for (int k = 1; k <= 8; ++k) {
                const int d = (from + k) % 8;
                const int xx = x3 + kDx[d];
                const int yy = y3 + kDy[d];
                if (f_[idx(xx, yy)] != 0) {
                    x4 = xx;
                    y4 = yy;
                    break;
                }
                if (d == 0) east_zero_examined = true;
            }
            auto& cur = f_[idx(x3, y3)];
            if (east_zero_examined)
                cur = -nbd;
            else if (cur == 1)
                cur = nbd;

            if (x4 == x && y4 == y && x3 == x1 && y3 == y1) break;
            x2 = x3;
            y2 = y3;
            x3 = x4;
            y3 = y4;
        }
        return c;
    }

    int w_;
    int h_;
    std::vector<int> f_;
};

} // namespace

std::vector<Contour> find_contours(const Mask& m) { return BorderTracer(m).run(); }

std::optional<Contour> select_target_contour(std::span<const Contour> contours, int width,
                                             int height)
{
    const Contour* best = nullptr;
    double best_area = -1.0;
    for (const auto& c : contours) {
        if (c.points.empty() || c.touches_border(width, height)) continue;
        const double a = c.area();
        bool better = a > best_area;
        if (!better && a == best_area) {
            const auto& p = c.points.front();
            const auto& q = best->points.front();
            better = p.y < q.y || (p.y == q.y && p.x < q.x);
        }
        if (better) {
            best = &c;
            best_area = a;
        }
    }
    if (!best) return std::nullopt;
    return *best;
}

// ---------------------------------------------------------------------------
// Circle Hough transform

std::vector<Point> circle_offsets(int r)
{
    std::vector<Point> pts;
    if (r <= 0) {
        pts.push_back({0, 0});
        return pts;
    }
    int x = r;
    int y = 0;
    int err = 1 - r;
    while (x >= y) {
        const Point oct[8] = {{x, y}, {y, x}, {-y, x}, {-x, y}, {-x, -y}, {-y, -x}, {y, -x}, {x, -y}};
        pts.insert(pts.end(), std::begin(oct), std::end(oct));
        ++y;
        if (err < 0) {
            err += 2 * y + 1;
        } else {
            --x;
            err += 2 * (y - x) + 1;
        }
    }
    std::sort(pts.begin(), pts.end(),
              [](const Point& a, const Point& b) { return a.y < b.y || (a.y == b.y && a.x < b.x); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

CircleFit fit_circle_hough(std::span<const Point> points, int width, int height, int r_min,
                           int r_max)
{
    if (points.size() < 3) throw Error("circle fit needs at least 3 contour points");
    if (r_min < 1 || r_max < r_min)
        throw Error("empty Hough radius range [" + std::to_string(r_min) + ", " +
                    std::to_string(r_max) + "]");
    if (width < 1 || height < 1) throw Error("Hough accumulator needs a non-empty frame");

    const std::size_t plane = std::size_t(width) * height;
    std::vector<int> acc(plane);
    CircleFit best{0, 0, 0, 0};
    for (int r = r_min; r <= r_max; ++r) {
        std::fill(acc.begin(), acc.end(), 0);
        const auto offsets = circle_offsets(r);
        for (const auto& p : points) {
            for (const auto& o : offsets) {
                const int cx = p.x + o.x;
                const int cy = p.y + o.y;
                if (cx >= 0 && cy >= 0 && cx < width && cy < height)
                    ++acc[std::size_t(cy) * width + cx];
            }
        }
        // Strictly greater keeps the smallest r, then cy, then cx on ties.
        for (std::size_t i = 0; i < plane; ++i) {
            if (acc[i] > best.votes) {
                best = {static_cast<int>(i % width), static_cast<int>(i / width), r, acc[i]};
            }
        }
    }
    if (best.votes == 0) throw Error("no Hough candidate inside the frame");
    return best;
}

Mask fill_circle(const CircleFit& c, int width, int height)
{
    Mask m(width, height);
    const long long r2 = static_cast<long long>(c.r) * c.r;
    const int y0 = std::max(0, c.cy - c.r);
    const int y1 = std::min(height - 1, c.cy + c.r);
    const int x0 = std::max(0, c.cx - c.r);
    const int x1 = std::min(width - 1, c.cx + c.r);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const long long dx = x - c.cx;
            const long long dy = y - c.cy;
            if (dx * dx + dy * dy <= r2) m.at(x, y) = kForeground;
        }
    return m;
}

Mask fill_contour(const Contour& c, int width, int height)
{
    Mask m(width, height);
    const auto& pts = c.points;
    const std::size_t n = pts.size();
    std::vector<double> xs;
    for (int y = 0; y < height; ++y) {
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = pts[i];
            const auto& b = pts[(i + 1) % n];
            // Half-open rule so a vertex on the scanline is counted once.
            if ((a.y > y) != (b.y > y)) {
                const double t = double(y - a.y) / double(b.y - a.y);
                xs.push_back(a.x + t * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
            const int from = std::max(0, static_cast<int>(std::floor(xs[k])) + 1);
            const int to = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1])) - 1);
            for (int x = from; x <= to; ++x) m.at(x, y) = kForeground;
        }
    }
    for (const auto& p : pts)
        if (m.contains(p.x, p.y)) m.at(p.x, p.y) = kForeground;
    return m;
}

Frame apply_mask(const Frame& enhanced, const Mask& region)
{
    if (!region.same_shape(enhanced.width, enhanced.height))
        throw Error("apply_mask: frame is " + std::to_string(enhanced.width) + "x" +
                    std::to_string(enhanced.height) + " but mask is " +
                    std::to_string(region.width) + "x" + std::to_string(region.height));
    Frame out(enhanced.width, enhanced.height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data[i] = region.data[i] == kForeground ? enhanced.data[i] : 0;
    return out;
}

SegmentationTrace segment_frame_traced(const Frame& enhanced, const SegmentParams& p)
{
    SegmentationTrace t;
    t.binary = threshold(enhanced, p.threshold);
    t.closed = close_cross3(t.binary);
    t.contours = find_contours(t.closed);
    auto target = select_target_contour(t.contours, enhanced.width, enhanced.height);
    if (!target) return t;

    SegmentationResult res;
    res.mode = p.mode;
    if (p.mode == SegmentMode::circle) {
        // A blob of one or two pixels has no circle to fit.
        if (target->points.size() < 3) return t;
        const int r_max = p.r_max > 0 ? p.r_max : std::min(enhanced.width, enhanced.height) / 2;
        res.circle = fit_circle_hough(target->points, enhanced.width, enhanced.height, p.r_min,
                                      r_max);
        res.mask = fill_circle(*res.circle, enhanced.width, enhanced.height);
    } else {
        res.mask = fill_contour(*target, enhanced.width, enhanced.height);
    }
    res.target = std::move(*target);
    res.segmented = apply_mask(enhanced, res.mask);
    t.result = std::move(res);
    return t;
}

std::optional<SegmentationResult> segment_frame(const Frame& enhanced, const SegmentParams& p)
{
    return segment_frame_traced(enhanced, p).result;
}

} // namespace usvol

#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mapmeta/features.hpp"
#include "mapmeta/image.hpp"
#include "mapmeta/sheet.hpp"

namespace mapmeta {

// Square raster window around a query and its candidates: the tight
// axis-aligned hull of all polygons, padded to a square of side
// L = max(P,Q) with the hull centered, then scaled to N x N grid cells.
struct RasterFrame {
    Vec2 origin;      // top-left of the hull in sheet pixels
    double extent_x = 0.0;  // P
    double extent_y = 0.0;  // Q
    int n = 256;
    RgbColor pad_color;

    double side() const { return std::max(extent_x, extent_y); }
    double scale() const { return static_cast<double>(n) / side(); }

    Vec2 to_grid(Vec2 sheet_pt) const {
        double pad_x = 0.5 * (side() - extent_x);
        double pad_y = 0.5 * (side() - extent_y);
        return {(sheet_pt.x - origin.x + pad_x) * scale(), (sheet_pt.y - origin.y + pad_y) * scale()};
    }
    Vec2 to_sheet(Vec2 grid_pt) const {
        double pad_x = 0.5 * (side() - extent_x);
        double pad_y = 0.5 * (side() - extent_y);
        double inv = side() / static_cast<double>(n);
        return {grid_pt.x * inv - pad_x + origin.x, grid_pt.y * inv - pad_y + origin.y};
    }
};

struct ProbabilityMap {
    int n = 0;
    std::vector<double> cells;  // row-major, values in [0,1]
    RasterFrame frame;

    double at(int col, int row) const { return cells[static_cast<size_t>(row) * n + col]; }
    double& at(int col, int row) { return cells[static_cast<size_t>(row) * n + col]; }
};

inline RasterFrame candidate_frame(const TextRegion& query,
                                   const std::vector<const TextRegion*>& candidates, int n = 256,
                                   const RgbImage* image = nullptr) {
    if (candidates.empty()) throw contract_error("candidate_frame: empty candidate set");
    double x0 = query.polygon[0].x, x1 = x0, y0 = query.polygon[0].y, y1 = y0;
    auto extend = [&](const Quad& q) {
        for (const Vec2& p : q) {
            x0 = std::min(x0, p.x);
            x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y);
            y1 = std::max(y1, p.y);
        }
    };
    extend(query.polygon);
    for (const TextRegion* c : candidates) extend(c->polygon);

    RasterFrame frame;
    frame.origin = {x0, y0};
    frame.extent_x = x1 - x0;
    frame.extent_y = y1 - y0;
    frame.n = n;
    if (image) frame.pad_color = mean_color(*image, x0, y0, x1, y1);
    return frame;
}

// Compatibility score between the query box and one candidate box:
// distance decay by gap relative to the pair's mean font height, squared
// cosine of the orientation difference, and the font-area ratio. Each
// factor lies in [0,1], so the product does too.
inline double surrogate_compatibility(const TextRegion& query, const TextRegion& candidate) {
    double gap = quad_gap_distance(query.polygon, candidate.polygon);
    double mean_h = 0.5 * (query.height + candidate.height);
    if (mean_h <= 0) mean_h = 1.0;
    double decay = std::exp(-gap / mean_h);
    double dtheta = angle_difference_deg(query.angle, candidate.angle) * 3.14159265358979323846 / 180.0;
    double orient = std::cos(dtheta) * std::cos(dtheta);
    double fq = font_area(query), fc = font_area(candidate);
    double ratio = std::min(fq, fc) / std::max(fq, fc);
    return decay * orient * ratio;
}

namespace detail {

inline void fill_quad(ProbabilityMap& map, const RasterFrame& frame, const Quad& poly,
                      double value) {
    Quad g;
    double gx0 = 1e300, gx1 = -1e300, gy0 = 1e300, gy1 = -1e300;
    for (int i = 0; i < 4; ++i) {
        g[i] = frame.to_grid(poly[i]);
        gx0 = std::min(gx0, g[i].x);
        gx1 = std::max(gx1, g[i].x);
        gy0 = std::min(gy0, g[i].y);
        gy1 = std::max(gy1, g[i].y);
    }
    int c0 = std::max(0, static_cast<int>(std::floor(gx0)));
    int c1 = std::min(map.n - 1, static_cast<int>(std::ceil(gx1)));
    int r0 = std::max(0, static_cast<int>(std::floor(gy0)));
    int r1 = std::min(map.n - 1, static_cast<int>(std::ceil(gy1)));
    for (int row = r0; row <= r1; ++row)
        for (int col = c0; col <= c1; ++col)
            if (point_in_quad({col + 0.5, row + 0.5}, g))
                map.at(col, row) = std::max(map.at(col, row), value);
}

}  // namespace detail

// Geometric stand-in for a learned segmenter: every candidate footprint
// is painted with its compatibility score (overlaps keep the max),
// background stays 0. Deterministic and independent of candidate order.
inline ProbabilityMap surrogate_probability_map(const TextRegion& query,
                                                const std::vector<const TextRegion*>& candidates,
                                                const RasterFrame& frame) {
    ProbabilityMap map;
    map.n = frame.n;
    map.frame = frame;
    map.cells.assign(static_cast<size_t>(frame.n) * frame.n, 0.0);
    for (const TextRegion* c : candidates)
        detail::fill_quad(map, frame, c->polygon, surrogate_compatibility(query, *c));
    return map;
}

// Accepts a binary PGM (P5, maxval 255) or a whitespace-separated text
// matrix of n*n values in [0,1].
inline ProbabilityMap load_probability_map(const std::string& path, const RasterFrame& frame) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open probability map: " + path);
    ProbabilityMap map;
    map.n = frame.n;
    map.frame = frame;
    map.cells.assign(static_cast<size_t>(frame.n) * frame.n, 0.0);

    std::string magic;
    in >> magic;
    if (magic == "P5") {
        long long w, h, maxval;
        if (!(in >> w >> h >> maxval)) throw parse_error(path + ": bad PGM header");
        if (w != frame.n || h != frame.n)
            throw parse_error(path + ": dimensions " + std::to_string(w) + "x" + std::to_string(h) +
                              " do not match frame size " + std::to_string(frame.n));
        if (maxval != 255) throw parse_error(path + ": PGM maxval must be 255");
        in.get();
        std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size()))
            throw parse_error(path + ": truncated PGM data");
        for (size_t i = 0; i < raw.size(); ++i) map.cells[i] = raw[i] / 255.0;
    } else {
        // plain-text matrix; the first token was already consumed
        in.clear();
        in.seekg(0);
        size_t count = 0;
        std::string tok;
        while (in >> tok) {
            if (count >= map.cells.size())
                throw parse_error(path + ": more than " + std::to_string(map.cells.size()) +
                                  " values");
            double v = parse_double(tok, "probability value");
            if (v < 0.0 || v > 1.0)
                throw parse_error(path + ": value " + tok + " outside [0,1]");
            map.cells[count++] = v;
        }
        if (count != map.cells.size())
            throw parse_error(path + ": expected " + std::to_string(map.cells.size()) +
                              " values, got " + std::to_string(count));
    }
    return map;
}

inline void save_probability_map_pgm(const ProbabilityMap& map, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write probability map: " + path);
    out << "P5\n" << map.n << " " << map.n << "\n255\n";
    for (double v : map.cells)
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
}

// Strict threshold: a cell is set iff its value exceeds p.
inline std::vector<uint8_t> binarize(const ProbabilityMap& map, double p = 0.5) {
    if (!(p > 0.0 && p < 1.0)) throw contract_error("binarize: threshold must lie in (0,1)");
    std::vector<uint8_t> mask(map.cells.size());
    for (size_t i = 0; i < map.cells.size(); ++i) mask[i] = map.cells[i] > p ? 1 : 0;
    return mask;
}

// Area-weighted average resampling; constant grids are preserved exactly
// in both directions.
inline std::vector<double> resize_area_average(const std::vector<double>& cells, int n_from,
                                               int n_to) {
    if (n_from <= 0 || n_to <= 0 || cells.size() != static_cast<size_t>(n_from) * n_from)
        throw contract_error("resize_area_average: bad dimensions");
    if (n_from == n_to) return cells;
    std::vector<double> out(static_cast<size_t>(n_to) * n_to, 0.0);
    double ratio = static_cast<double>(n_from) / n_to;
    for (int row = 0; row < n_to; ++row) {
        double y0 = row * ratio, y1 = (row + 1) * ratio;
        for (int col = 0; col < n_to; ++col) {
            double x0 = col * ratio, x1 = (col + 1) * ratio;
            double acc = 0.0, area = 0.0;
            for (int sy = static_cast<int>(std::floor(y0)); sy < static_cast<int>(std::ceil(y1)); ++sy) {
                double hy = std::min<double>(y1, sy + 1) - std::max<double>(y0, sy);
                if (hy <= 0) continue;
                for (int sx = static_cast<int>(std::floor(x0)); sx < static_cast<int>(std::ceil(x1)); ++sx) {
                    double hx = std::min<double>(x1, sx + 1) - std::max<double>(x0, sx);
                    if (hx <= 0) continue;
                    acc += cells[static_cast<size_t>(std::min(sy, n_from - 1)) * n_from +
                                 std::min(sx, n_from - 1)] *
                           hx * hy;
                    area += hx * hy;
                }
            }
            out[static_cast<size_t>(row) * n_to + col] = area > 0 ? acc / area : 0.0;
        }
    }
    return out;
}

}  // namespace mapmeta

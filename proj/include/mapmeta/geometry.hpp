#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "mapmeta/common.hpp"

namespace mapmeta {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
    friend bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
    double norm() const { return std::hypot(x, y); }
};

using Quad = std::array<Vec2, 4>;

struct BoxGeometry {
    Vec2 center;
    double width = 0.0;   // extent along the box axis
    double height = 0.0;  // extent across the box axis
    double angle = 0.0;   // degrees clockwise, 0 = vertical, 90 = horizontal, in [0,180)
};

inline double quad_area(const Quad& q) {
    double a = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Vec2& p = q[i];
        const Vec2& n = q[(i + 1) % 4];
        a += p.x * n.y - n.x * p.y;
    }
    return std::abs(a) * 0.5;
}

// Clockwise angle of a direction in pixel coordinates (y down), measured
// from the vertical axis and reduced mod 180 (a box axis has no sign).
inline double axis_angle_deg(Vec2 d) {
    double a = std::atan2(d.x, -d.y) * 180.0 / 3.14159265358979323846;
    a = std::fmod(a, 180.0);
    if (a < 0.0) a += 180.0;
    if (a >= 180.0) a = 0.0;
    return a;
}

// Difference between two box angles, folded into [0,90].
inline double angle_difference_deg(double a, double b) {
    double d = std::abs(a - b);
    d = std::fmod(d, 180.0);
    if (d > 90.0) d = 180.0 - d;
    return d;
}

// Derives (center, width, height, angle) from the four corners.
// The longer edge pair is taken as the box axis; width is its mean length
// and height the mean of the other pair. Equal edge lengths keep the
// first edge (corner order) as the axis.
inline BoxGeometry derive_geometry(const Quad& q) {
    if (quad_area(q) <= 0.0) throw validation_error("degenerate polygon: zero area");
    BoxGeometry g;
    g.center = (q[0] + q[1] + q[2] + q[3]) * 0.25;

    Vec2 e0 = q[1] - q[0], e0b = q[2] - q[3];
    Vec2 e1 = q[2] - q[1], e1b = q[3] - q[0];
    double len0 = 0.5 * (e0.norm() + e0b.norm());
    double len1 = 0.5 * (e1.norm() + e1b.norm());

    Vec2 axis;
    if (len0 >= len1) {
        axis = e0 + e0b;
        g.width = len0;
        g.height = len1;
    } else {
        axis = e1 + e1b;
        g.width = len1;
        g.height = len0;
    }
    if (axis.norm() == 0.0) axis = len0 >= len1 ? e0 : e1;
    g.angle = axis_angle_deg(axis);
    return g;
}

// Even-odd rule; points exactly on an edge may land on either side, which
// is acceptable for cell-center sampling.
inline bool point_in_quad(Vec2 p, const Quad& q) {
    bool inside = false;
    for (int i = 0, j = 3; i < 4; j = i++) {
        const Vec2& a = q[i];
        const Vec2& b = q[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            double t = (p.y - a.y) / (b.y - a.y);
            if (p.x < a.x + t * (b.x - a.x)) inside = !inside;
        }
    }
    return inside;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double len2 = ab.x * ab.x + ab.y * ab.y;
    if (len2 == 0.0) return (p - a).norm();
    double t = ((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 p3, Vec2 p4) {
    auto cross = [](Vec2 a, Vec2 b, Vec2 c) {
        return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    };
    double d1 = cross(p3, p4, p1), d2 = cross(p3, p4, p2);
    double d3 = cross(p1, p2, p3), d4 = cross(p1, p2, p4);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    auto on_seg = [&](Vec2 a, Vec2 b, Vec2 c) {
        return cross(a, b, c) == 0 && std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
               std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
    };
    return on_seg(p3, p4, p1) || on_seg(p3, p4, p2) || on_seg(p1, p2, p3) || on_seg(p1, p2, p4);
}

// Minimum distance between two quads; 0 when they touch or overlap.
inline double quad_gap_distance(const Quad& a, const Quad& b) {
    for (const Vec2& p : a)
        if (point_in_quad(p, b)) return 0.0;
    for (const Vec2& p : b)
        if (point_in_quad(p, a)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) {
        Vec2 a1 = a[i], a2 = a[(i + 1) % 4];
        for (int j = 0; j < 4; ++j) {
            Vec2 b1 = b[j], b2 = b[(j + 1) % 4];
            if (segments_intersect(a1, a2, b1, b2)) return 0.0;
            best = std::min({best, point_segment_distance(a1, b1, b2),
                             point_segment_distance(a2, b1, b2),
                             point_segment_distance(b1, a1, a2),
                             point_segment_distance(b2, a1, a2)});
        }
    }
    return best;
}

}  // namespace mapmeta

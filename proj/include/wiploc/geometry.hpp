#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace wiploc {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double distance(Vec2 a, Vec2 b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

struct Segment {
    Vec2 a;
    Vec2 b;
};

/// Axis-aligned rectangle, closed on all sides.
struct Rect {
    Vec2 min;
    Vec2 max;

    bool contains(Vec2 p) const
    {
        return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
    }
};

namespace detail {

inline double cross(Vec2 o, Vec2 a, Vec2 b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline int sign(double v)
{
    constexpr double eps = 1e-12;
    return v > eps ? 1 : (v < -eps ? -1 : 0);
}

inline bool on_segment(Vec2 p, Vec2 a, Vec2 b)
{
    return std::min(a.x, b.x) - 1e-12 <= p.x && p.x <= std::max(a.x, b.x) + 1e-12
        && std::min(a.y, b.y) - 1e-12 <= p.y && p.y <= std::max(a.y, b.y) + 1e-12;
}

} // namespace detail

/// True when the two closed segments share at least one point.
inline bool segments_intersect(const Segment& s, const Segment& t)
{
    using detail::cross;
    using detail::sign;
    const int d1 = sign(cross(t.a, t.b, s.a));
    const int d2 = sign(cross(t.a, t.b, s.b));
    const int d3 = sign(cross(s.a, s.b, t.a));
    const int d4 = sign(cross(s.a, s.b, t.b));
    if (d1 * d2 < 0 && d3 * d4 < 0)
        return true;
    if (d1 == 0 && detail::on_segment(s.a, t.a, t.b))
        return true;
    if (d2 == 0 && detail::on_segment(s.b, t.a, t.b))
        return true;
    if (d3 == 0 && detail::on_segment(t.a, s.a, s.b))
        return true;
    if (d4 == 0 && detail::on_segment(t.b, s.a, s.b))
        return true;
    return false;
}

inline int walls_crossed(Vec2 from, Vec2 to, std::span<const Segment> walls)
{
    const Segment path{from, to};
    int n = 0;
    for (const auto& w : walls)
        if (segments_intersect(path, w))
            ++n;
    return n;
}

} // namespace wiploc

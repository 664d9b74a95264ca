#pragma once

// Polyline geometry in the Frenet frame of a ReferencePath: arc-length
// resampling, global point-to-path projection and matched lateral profiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ccd/core_model.hpp"

namespace ccd {

struct Projection {
    double s = 0.0;                 // arc length along the reference [m]
    double d = 0.0;                 // signed lateral offset, positive left [m]
    std::size_t segment_index = 0;

    friend bool operator==(const Projection&, const Projection&) = default;
};

// Cumulative arc length per vertex; zero-length segments contribute 0.
inline std::vector<double> cumulative_arclength(std::span<const Pose2D> path)
{
    std::vector<double> cum;
    cum.reserve(path.size());
    if (path.empty()) {
        return cum;
    }
    cum.push_back(0.0);
    for (std::size_t i = 1; i < path.size(); ++i) {
        cum.push_back(cum.back() + norm(path[i].position() - path[i - 1].position()));
    }
    return cum;
}

// n points at arc lengths {0, h/(n-1), ..., h} along path. Positions are
// linear interpolations of the segments; headings follow the segment direction.
inline std::vector<Pose2D> resample_uniform(std::span<const Pose2D> path, std::size_t n, double horizon)
{
    detail::require(n >= 2, "resample_uniform: n must be >= 2");
    detail::require(std::isfinite(horizon) && horizon > 0.0, "resample_uniform: horizon must be > 0");
    detail::require(path.size() >= 2, "resample_uniform: path needs at least 2 points");

    const std::vector<double> cum = cumulative_arclength(path);
    const double total = cum.back();
    // Accept a horizon that equals the path length up to summation rounding.
    if (total < horizon * (1.0 - 1e-12)) {
        throw PathTooShort("resample_uniform: path length " + std::to_string(total) + " m < horizon " +
                           std::to_string(horizon) + " m");
    }

    std::vector<Pose2D> out;
    out.reserve(n);
    std::size_t seg = 0;
    const std::size_t last_seg = path.size() - 2;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = k + 1 == n ? horizon : horizon * static_cast<double>(k) / static_cast<double>(n - 1);
        while (seg < last_seg && (cum[seg + 1] < s || cum[seg + 1] == cum[seg])) {
            ++seg;
        }
        // Skip a trailing run of zero-length segments backwards if needed.
        std::size_t j = seg;
        while (j > 0 && cum[j + 1] == cum[j]) {
            --j;
        }
        const Vec2 a = path[j].position();
        const Vec2 b = path[j + 1].position();
        const double len = cum[j + 1] - cum[j];
        const double t = std::clamp((s - cum[j]) / len, 0.0, 1.0);
        const Vec2 ab = b - a;
        const double heading = wrap_angle(std::atan2(ab.y, ab.x));
        if (t <= 0.0) {
            out.emplace_back(a.x, a.y, heading);
        } else if (t >= 1.0) {
            out.emplace_back(b.x, b.y, heading);
        } else {
            out.emplace_back(a.x + t * ab.x, a.y + t * ab.y, heading);
        }
    }
    return out;
}

namespace detail {

struct SegmentFoot {
    double dist;
    double s;
    double d;
};

inline SegmentFoot foot_on_segment(const ReferencePath& ref, std::size_t j, Vec2 p)
{
    const auto& v = ref.vertices();
    const auto& cum = ref.cumulative_arclength();
    const Vec2 a = v[j].position();
    const Vec2 b = v[j + 1].position();
    const Vec2 ab = b - a;
    const double t = dot(p - a, ab) / dot(ab, ab);
    if (t <= 0.0 || t >= 1.0) {
        const bool at_b = t >= 1.0;
        const Vec2 r = p - (at_b ? b : a);
        const double dist = norm(r);
        return {dist, cum[at_b ? j + 1 : j], cross(ab, r) < 0.0 ? -dist : dist};
    }
    // Interior foot: the perpendicular component directly, so along-track
    // rounding cannot leak into the offset.
    const double d = cross(ab, p - a) / (cum[j + 1] - cum[j]);
    return {std::abs(d), cum[j] + t * (cum[j + 1] - cum[j]), d};
}

inline double distance_to_box(Vec2 p, Vec2 lo, Vec2 hi)
{
    const double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
    const double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
    return std::hypot(dx, dy);
}

// Distances within this band are treated as ties, resolved by smaller s.
inline constexpr double kProjectionTieTolerance = 1e-10;

} // namespace detail

// Global minimum-distance projection onto the polyline. Open ends clamp to
// s = 0 and s = length. Equidistant candidates resolve to the smallest s.
inline Projection project_point(const ReferencePath& ref, Vec2 p)
{
    const auto& chunks = ref.chunks();
    std::vector<double> bound(chunks.size());
    std::size_t seed = 0;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        bound[c] = detail::distance_to_box(p, chunks[c].lo, chunks[c].hi);
        if (bound[c] < bound[seed]) {
            seed = c;
        }
    }

    Projection best{};
    double best_dist = std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t c) {
        for (std::size_t j = chunks[c].first_segment; j <= chunks[c].last_segment; ++j) {
            const auto f = detail::foot_on_segment(ref, j, p);
            const bool closer = f.dist < best_dist - detail::kProjectionTieTolerance;
            const bool tie_smaller_s =
                std::abs(f.dist - best_dist) <= detail::kProjectionTieTolerance && f.s < best.s;
            if (closer || tie_smaller_s) {
                best_dist = closer ? f.dist : std::min(best_dist, f.dist);
                best = {f.s, f.d, j};
            }
        }
    };
    consider(seed);
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        if (c != seed && bound[c] <= best_dist + detail::kProjectionTieTolerance) {
            consider(c);
        }
    }
    return best;
}

inline Projection project_point(const ReferencePath& ref, const Pose2D& p) { return project_point(ref, p.position()); }

struct FrenetFrame {
    Vec2 origin;
    Vec2 tangent; // unit
    Vec2 normal;  // unit, pointing left
    std::size_t segment_index;
};

// Point and unit frame on the reference at arc length s (clamped to [0, L]).
// A station on a vertex belongs to the segment that starts there, except at L.
inline FrenetFrame frame_at(const ReferencePath& ref, double s)
{
    const auto& cum = ref.cumulative_arclength();
    const auto& v = ref.vertices();
    s = std::clamp(s, 0.0, ref.length());
    auto it = std::upper_bound(cum.begin(), cum.end(), s);
    std::size_t j = it == cum.begin() ? 0 : static_cast<std::size_t>(it - cum.begin()) - 1;
    j = std::min(j, ref.segment_count() - 1);
    const Vec2 a = v[j].position();
    const Vec2 ab = v[j + 1].position() - a;
    const double len = norm(ab);
    const Vec2 t{ab.x / len, ab.y / len};
    const double u = s - cum[j];
    const Vec2 origin = u >= len ? v[j + 1].position() : a + u * t;
    return {origin, t, {-t.y, t.x}, j};
}

inline Pose2D point_at(const ReferencePath& ref, double s, double d = 0.0)
{
    const auto f = frame_at(ref, s);
    const Vec2 p = f.origin + d * f.normal;
    return {p.x, p.y, wrap_angle(std::atan2(f.tangent.y, f.tangent.x))};
}

// Resamples the first cfg.horizon meters of traj into cfg.n_points and
// projects each onto ref. Stations must come out strictly increasing.
inline LateralProfile lateral_profile(const ReferencePath& ref, const Trajectory& traj, const DetectorConfig& cfg)
{
    const auto poses = traj.poses();
    const auto samples = resample_uniform(poses, cfg.n_points, cfg.horizon);
    std::vector<double> offsets;
    std::vector<double> stations;
    offsets.reserve(samples.size());
    stations.reserve(samples.size());
    for (const auto& p : samples) {
        const auto proj = project_point(ref, p);
        if (!stations.empty() && !(proj.s > stations.back())) {
            throw NonMonotonicProjection("lateral_profile: station " + std::to_string(stations.size()) +
                                         " projects to s=" + std::to_string(proj.s) +
                                         " which does not advance past " + std::to_string(stations.back()));
        }
        offsets.push_back(proj.d);
        stations.push_back(proj.s);
    }
    return {std::move(offsets), std::move(stations), traj.stamp()};
}

// How far the first and last plan segments may be extended when a station's
// normal just misses the plan's ends (plans that both start at the ego but
// are sampled differently on a curve).
inline constexpr double kPlanEndExtrapolation = 1.0; // m

// Lateral offset of traj at each given reference station: the signed
// distance along the station's normal to the nearest crossing of traj.
// Used to evaluate a second plan at exactly the stations of a first one.
inline LateralProfile lateral_profile_at_stations(const ReferencePath& ref, const Trajectory& traj,
                                                  std::span<const double> stations)
{
    constexpr double kEdge = 1e-12;
    const auto& pts = traj.points();
    const std::size_t last = pts.size() - 2;
    std::vector<double> offsets;
    offsets.reserve(stations.size());
    for (const double s : stations) {
        const auto f = frame_at(ref, s);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
            const Vec2 a = pts[j].pose.position();
            const Vec2 ab = pts[j + 1].pose.position() - a;
            const double denom = cross(f.normal, ab);
            if (denom == 0.0) {
                continue;
            }
            const Vec2 ap = a - f.origin;
            const double u = cross(ap, f.normal) / denom;
            const double slack = kPlanEndExtrapolation / norm(ab);
            const double lo = j == 0 ? -slack : -kEdge;
            const double hi = j == last ? 1.0 + slack : 1.0 + kEdge;
            if (u < lo || u > hi) {
                continue;
            }
            const double d = cross(ap, ab) / denom;
            if (std::abs(d) < std::abs(best)) {
                best = d;
            }
        }
        if (!std::isfinite(best)) {
            throw PathTooShort("lateral_profile_at_stations: trajectory does not cover station s=" +
                               std::to_string(s));
        }
        offsets.push_back(best);
    }
    return {std::move(offsets), std::vector<double>(stations.begin(), stations.end()), traj.stamp()};
}

} // namespace ccd

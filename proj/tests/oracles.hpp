#pragma once

// Independent reference implementations used as test oracles. They share
// no code with the library beyond plain value types and are written for
// clarity, not speed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

struct P {
    double x;
    double y;
};

// Lat_m, Lat_avg and the weighted sum, accumulated in long double.
struct LatTriple {
    double m;
    double avg;
    double lat;
};

inline LatTriple brute_lat(const std::vector<double>& a, const std::vector<double>& b, double w_m, double w_avg)
{
    long double mx = 0.0L;
    long double sum = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = std::fabs(static_cast<long double>(a[i]) - static_cast<long double>(b[i]));
        if (d > mx) {
            mx = d;
        }
        sum += d;
    }
    const long double avg = sum / static_cast<long double>(a.size());
    return {static_cast<double>(mx), static_cast<double>(avg),
            static_cast<double>(static_cast<long double>(w_m) * mx + static_cast<long double>(w_avg) * avg)};
}

inline bool rel_close(double got, double want, double rel)
{
    const double scale = std::max({1.0, std::fabs(got), std::fabs(want)});
    return std::fabs(got - want) <= rel * scale;
}

// Arc-length walk: the point at distance s along the polyline.
inline P walk(const std::vector<P>& pts, double s)
{
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double dx = pts[i + 1].x - pts[i].x;
        const double dy = pts[i + 1].y - pts[i].y;
        const double len = std::sqrt(dx * dx + dy * dy);
        if (acc + len >= s) {
            const double t = (s - acc) / len;
            return {pts[i].x + t * dx, pts[i].y + t * dy};
        }
        acc += len;
    }
    return pts.back();
}

inline double length(const std::vector<P>& pts)
{
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        acc += std::hypot(pts[i + 1].x - pts[i].x, pts[i + 1].y - pts[i].y);
    }
    return acc;
}

// Dense sampling of the polyline: minimum distance from p and the arc
// length where it is attained (first occurrence).
struct DenseHit {
    double dist;
    double s;
};

inline DenseHit dense_nearest(const std::vector<P>& pts, P p, std::size_t samples)
{
    const double total = length(pts);
    DenseHit best{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t k = 0; k < samples; ++k) {
        const double s = total * static_cast<double>(k) / static_cast<double>(samples - 1);
        const P q = walk(pts, s);
        const double d = std::hypot(p.x - q.x, p.y - q.y);
        if (d < best.dist) {
            best = {d, s};
        }
    }
    // Vertices exactly, so corners are never missed between samples.
    double acc = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) {
            acc += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
        }
        const double d = std::hypot(p.x - pts[i].x, p.y - pts[i].y);
        if (d < best.dist) {
            best = {d, acc};
        }
    }
    return best;
}

// Zero-order-hold pairing by enumeration: for each modular stamp, the
// index of the newest e2e stamp not after it, if the skew is within tol.
inline std::vector<std::optional<std::size_t>> zoh_pairs(const std::vector<double>& mod, const std::vector<double>& e2e,
                                                         double tol)
{
    std::vector<std::optional<std::size_t>> out;
    for (const double m : mod) {
        std::optional<std::size_t> pick;
        for (std::size_t j = 0; j < e2e.size(); ++j) {
            if (e2e[j] <= m && (!pick || e2e[j] > e2e[*pick])) {
                pick = j;
            }
        }
        // 1e-9 s: stamps are exact to the microsecond, differences are not
        if (pick && m - e2e[*pick] > tol + 1e-9) {
            pick.reset();
        }
        out.push_back(pick);
    }
    return out;
}

// Windowed run policy, recomputed from scratch at every sample: mean of
// all lat values with stamp in (t - W, t], runs of mean >= threshold.
struct Run {
    double start;
    double end;
    double peak;
};

inline std::vector<Run> windowed_runs(const std::vector<std::pair<double, double>>& samples, double window,
                                      double threshold)
{
    std::vector<Run> runs;
    bool open = false;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double t = samples[i].first;
        double sum = 0.0;
        int n = 0;
        for (std::size_t j = 0; j <= i; ++j) {
            if (samples[j].first > t - window + 1e-9) {
                sum += samples[j].second;
                ++n;
            }
        }
        const double mean = sum / n;
        if (mean >= threshold) {
            if (!open) {
                runs.push_back({t, t, mean});
                open = true;
            } else {
                runs.back().end = t;
                runs.back().peak = std::max(runs.back().peak, mean);
            }
        } else {
            open = false;
        }
    }
    return runs;
}

// Circle through three points (circumradius); used for the bicycle check.
inline double circumradius(P a, P b, P c)
{
    const double ab = std::hypot(b.x - a.x, b.y - a.y);
    const double bc = std::hypot(c.x - b.x, c.y - b.y);
    const double ca = std::hypot(a.x - c.x, a.y - c.y);
    const double area2 = std::fabs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
    return ab * bc * ca / (2.0 * area2);
}

inline std::vector<double> uniform_vec(std::mt19937& rng, std::size_t n, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = u(rng);
    }
    return v;
}

} // namespace oracle

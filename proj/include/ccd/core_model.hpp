#pragma once

// Domain types shared by the detectors, the simulator and the log format.
// All types validate on construction and are immutable afterwards.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ccd/errors.hpp"

namespace ccd {

namespace detail {

inline void require(bool condition, const char* what)
{
    if (!condition) {
        throw InvalidArgument(what);
    }
}

inline bool finite(double v) { return std::isfinite(v); }

} // namespace detail

// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
    constexpr double pi = std::numbers::pi;
    if (!std::isfinite(a)) {
        return a;
    }
    if (a > -pi && a <= pi) {
        return a;
    }
    double r = std::fmod(a + pi, 2.0 * pi);
    if (r <= 0.0) {
        r += 2.0 * pi;
    }
    return r - pi;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

class Pose2D {
public:
    Pose2D() = default;

    // heading must already lie in (-pi, pi]; use wrap_angle() first.
    Pose2D(double x, double y, double heading) : x_(x), y_(y), heading_(heading)
    {
        detail::require(detail::finite(x) && detail::finite(y) && detail::finite(heading),
                        "Pose2D: non-finite field");
        detail::require(heading > -std::numbers::pi && heading <= std::numbers::pi,
                        "Pose2D: heading outside (-pi, pi]");
    }

    [[nodiscard]] double x() const noexcept { return x_; }
    [[nodiscard]] double y() const noexcept { return y_; }
    [[nodiscard]] double heading() const noexcept { return heading_; }
    [[nodiscard]] Vec2 position() const noexcept { return {x_, y_}; }

    friend bool operator==(const Pose2D&, const Pose2D&) = default;

private:
    double x_ = 0.0;
    double y_ = 0.0;
    double heading_ = 0.0;
};

enum class PlanSource { Modular, EndToEnd };

struct TrajectoryPoint {
    Pose2D pose;
    std::optional<double> target_speed;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

// A timestamped plan. Modular plans carry a target speed on every point;
// end-to-end waypoints never do (their longitudinal intent is a SpeedClass).
class Trajectory {
public:
    Trajectory(double stamp, std::vector<TrajectoryPoint> points, PlanSource source)
        : stamp_(stamp), points_(std::move(points)), source_(source)
    {
        detail::require(detail::finite(stamp), "Trajectory: non-finite stamp");
        detail::require(points_.size() >= 2, "Trajectory: fewer than 2 points");
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const auto& p = points_[i];
            if (source_ == PlanSource::Modular) {
                detail::require(p.target_speed.has_value(), "Trajectory: modular point without target speed");
                detail::require(detail::finite(*p.target_speed) && *p.target_speed >= 0.0,
                                "Trajectory: target speed must be finite and >= 0");
            } else {
                detail::require(!p.target_speed.has_value(), "Trajectory: end-to-end point with target speed");
            }
            if (i > 0) {
                detail::require(norm(p.pose.position() - points_[i - 1].pose.position()) > 0.0,
                                "Trajectory: coincident consecutive points");
            }
        }
    }

    [[nodiscard]] double stamp() const noexcept { return stamp_; }
    [[nodiscard]] const std::vector<TrajectoryPoint>& points() const noexcept { return points_; }
    [[nodiscard]] PlanSource source() const noexcept { return source_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }

    [[nodiscard]] std::vector<Pose2D> poses() const
    {
        std::vector<Pose2D> out;
        out.reserve(points_.size());
        for (const auto& p : points_) {
            out.push_back(p.pose);
        }
        return out;
    }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    double stamp_;
    std::vector<TrajectoryPoint> points_;
    PlanSource source_;
};

// The global planner's route, shared by both systems as the Frenet frame.
class ReferencePath {
public:
    explicit ReferencePath(std::vector<Pose2D> vertices) : vertices_(std::move(vertices))
    {
        detail::require(vertices_.size() >= 2, "ReferencePath: fewer than 2 vertices");
        cumulative_.reserve(vertices_.size());
        cumulative_.push_back(0.0);
        for (std::size_t i = 1; i < vertices_.size(); ++i) {
            const double len = norm(vertices_[i].position() - vertices_[i - 1].position());
            detail::require(len > 0.0, "ReferencePath: coincident consecutive vertices");
            cumulative_.push_back(cumulative_.back() + len);
            detail::require(cumulative_.back() > cumulative_[i - 1],
                            "ReferencePath: arc length not strictly increasing");
        }
        build_chunks();
    }

    // Builds a path from bare positions; vertex headings follow the outgoing segment.
    static ReferencePath from_points(const std::vector<Vec2>& pts)
    {
        detail::require(pts.size() >= 2, "ReferencePath: fewer than 2 vertices");
        std::vector<Pose2D> v;
        v.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vec2 d = i + 1 < pts.size() ? pts[i + 1] - pts[i] : pts[i] - pts[i - 1];
            v.emplace_back(pts[i].x, pts[i].y, wrap_angle(std::atan2(d.y, d.x)));
        }
        return ReferencePath(std::move(v));
    }

    [[nodiscard]] const std::vector<Pose2D>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::vector<double>& cumulative_arclength() const noexcept { return cumulative_; }
    [[nodiscard]] double length() const noexcept { return cumulative_.back(); }
    [[nodiscard]] std::size_t segment_count() const noexcept { return vertices_.size() - 1; }

    // Axis-aligned bounds of a run of consecutive segments, used to prune
    // the global nearest-segment search.
    struct Chunk {
        std::size_t first_segment;
        std::size_t last_segment; // inclusive
        Vec2 lo;
        Vec2 hi;
    };
    static constexpr std::size_t kChunkSegments = 16;

    [[nodiscard]] const std::vector<Chunk>& chunks() const noexcept { return chunks_; }

    friend bool operator==(const ReferencePath& a, const ReferencePath& b) { return a.vertices_ == b.vertices_; }

private:
    void build_chunks()
    {
        for (std::size_t first = 0; first < segment_count(); first += kChunkSegments) {
            const std::size_t last = std::min(first + kChunkSegments, segment_count()) - 1;
            Chunk c{first, last, vertices_[first].position(), vertices_[first].position()};
            for (std::size_t v = first; v <= last + 1; ++v) {
                const Vec2 p = vertices_[v].position();
                c.lo = {std::min(c.lo.x, p.x), std::min(c.lo.y, p.y)};
                c.hi = {std::max(c.hi.x, p.x), std::max(c.hi.y, p.y)};
            }
            chunks_.push_back(c);
        }
    }

    std::vector<Pose2D> vertices_;
    std::vector<double> cumulative_;
    std::vector<Chunk> chunks_;
};

// Signed lateral offsets of one plan at matched reference stations.
class LateralProfile {
public:
    LateralProfile(std::vector<double> offsets, std::vector<double> arclengths, double stamp)
        : offsets_(std::move(offsets)), arclengths_(std::move(arclengths)), stamp_(stamp)
    {
        detail::require(!offsets_.empty(), "LateralProfile: empty");
        detail::require(offsets_.size() == arclengths_.size(), "LateralProfile: size mismatch");
        detail::require(detail::finite(stamp), "LateralProfile: non-finite stamp");
        for (std::size_t i = 0; i < offsets_.size(); ++i) {
            detail::require(detail::finite(offsets_[i]) && detail::finite(arclengths_[i]),
                            "LateralProfile: non-finite value");
            if (i > 0) {
                detail::require(arclengths_[i] > arclengths_[i - 1],
                                "LateralProfile: arclengths not strictly increasing");
            }
        }
    }

    [[nodiscard]] const std::vector<double>& offsets() const noexcept { return offsets_; }
    [[nodiscard]] const std::vector<double>& arclengths() const noexcept { return arclengths_; }
    [[nodiscard]] double stamp() const noexcept { return stamp_; }
    [[nodiscard]] std::size_t size() const noexcept { return offsets_.size(); }

    friend bool operator==(const LateralProfile&, const LateralProfile&) = default;

private:
    std::vector<double> offsets_;
    std::vector<double> arclengths_;
    double stamp_;
};

// Ordinal hazard class predicted by the end-to-end system.
// Lower value means higher hazard.
class SpeedClass {
public:
    static constexpr int kBrake = 0;
    static constexpr int kPedestrian = 1;
    static constexpr int kWarning = 2;
    static constexpr int kOk = 3;

    explicit SpeedClass(int value) : value_(value)
    {
        detail::require(value >= kBrake && value <= kOk, "SpeedClass: value outside {0..3}");
    }

    [[nodiscard]] int value() const noexcept { return value_; }
    [[nodiscard]] bool more_hazardous_than(SpeedClass other) const noexcept { return value_ < other.value_; }

    [[nodiscard]] const char* name() const noexcept
    {
        switch (value_) {
        case kBrake: return "Brake";
        case kPedestrian: return "Pedestrian";
        case kWarning: return "Warning";
        default: return "OK";
        }
    }

    friend bool operator==(const SpeedClass&, const SpeedClass&) = default;

private:
    int value_;
};

struct SpeedClassSample {
    SpeedClassSample(double stamp_, SpeedClass sc_) : stamp(stamp_), sc(sc_)
    {
        detail::require(detail::finite(stamp_), "SpeedClassSample: non-finite stamp");
    }

    double stamp;
    SpeedClass sc;

    friend bool operator==(const SpeedClassSample&, const SpeedClassSample&) = default;
};

// Modular target speed at one instant.
struct PlanSample {
    PlanSample(double stamp_, double v_) : stamp(stamp_), v(v_)
    {
        detail::require(detail::finite(stamp_), "PlanSample: non-finite stamp");
        detail::require(detail::finite(v_) && v_ >= 0.0, "PlanSample: speed must be finite and >= 0");
    }

    double stamp;
    double v;

    friend bool operator==(const PlanSample&, const PlanSample&) = default;
};

// Slack on stamp comparisons against align_tolerance, far below the 1 us
// resolution of logged stamps; keeps skew == tolerance on the paired side.
inline constexpr double kStampEpsilon = 1e-9;

struct DetectorConfig {
    std::size_t n_points = 20;
    double w_m = 1.0;
    double w_avg = 1.0;
    double lat_threshold = 1.0;     // m, uncalibrated default
    std::size_t long_persistence = 1;
    double v_deadband = 0.05;       // m/s
    double align_tolerance = 0.6;   // s
    double smoothing_window = 0.5;  // s
    double horizon = 30.0;          // m

    friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

inline DetectorConfig validate_config(const DetectorConfig& cfg)
{
    auto check = [](bool ok, const char* field, const char* what) {
        if (!ok) {
            throw ConfigError(field, what);
        }
    };
    check(cfg.n_points >= 2, "n_points", "must be >= 2");
    check(std::isfinite(cfg.w_m) && cfg.w_m >= 0.0, "w_m", "must be finite and >= 0");
    check(std::isfinite(cfg.w_avg) && cfg.w_avg >= 0.0, "w_avg", "must be finite and >= 0");
    check(cfg.w_m > 0.0 || cfg.w_avg > 0.0, "weights", "w_m and w_avg must not both be zero");
    check(std::isfinite(cfg.lat_threshold) && cfg.lat_threshold > 0.0, "lat_threshold", "must be > 0");
    check(cfg.long_persistence >= 1, "long_persistence", "must be >= 1");
    check(std::isfinite(cfg.v_deadband) && cfg.v_deadband >= 0.0, "v_deadband", "must be >= 0");
    check(std::isfinite(cfg.align_tolerance) && cfg.align_tolerance > 0.0, "align_tolerance", "must be > 0");
    check(std::isfinite(cfg.smoothing_window) && cfg.smoothing_window > 0.0, "smoothing_window", "must be > 0");
    check(std::isfinite(cfg.horizon) && cfg.horizon > 0.0, "horizon", "must be > 0");
    return cfg;
}

// Lat_m, Lat_avg and their weighted sum at one timestamp. lat is derived from the weights in force.
class LateralScore {
public:
    LateralScore(double stamp, double lat_m, double lat_avg, double w_m, double w_avg)
        : stamp_(stamp), lat_m_(lat_m), lat_avg_(lat_avg), lat_(w_m * lat_m + w_avg * lat_avg)
    {
        detail::require(detail::finite(stamp) && detail::finite(lat_m) && detail::finite(lat_avg),
                        "LateralScore: non-finite value");
        detail::require(lat_avg >= 0.0 && lat_m >= lat_avg, "LateralScore: requires lat_m >= lat_avg >= 0");
    }

    [[nodiscard]] double stamp() const noexcept { return stamp_; }
    [[nodiscard]] double lat_m() const noexcept { return lat_m_; }
    [[nodiscard]] double lat_avg() const noexcept { return lat_avg_; }
    [[nodiscard]] double lat() const noexcept { return lat_; }

    friend bool operator==(const LateralScore&, const LateralScore&) = default;

private:
    double stamp_;
    double lat_m_;
    double lat_avg_;
    double lat_;
};

class ResponseAction {
public:
    enum class Level { None, SpeedReduction, MinimalRiskManeuver };

    ResponseAction() = default;

    static ResponseAction none() { return {}; }
    static ResponseAction minimal_risk_maneuver() { return ResponseAction(Level::MinimalRiskManeuver, std::nullopt); }
    static ResponseAction speed_reduction(double factor)
    {
        detail::require(factor > 0.0 && factor < 1.0, "ResponseAction: factor must lie in (0, 1)");
        return ResponseAction(Level::SpeedReduction, factor);
    }

    [[nodiscard]] Level level() const noexcept { return level_; }
    [[nodiscard]] std::optional<double> factor() const noexcept { return factor_; }

    // Total order on strength: None < SpeedReduction (smaller factor is
    // stronger) < MinimalRiskManeuver.
    [[nodiscard]] double severity() const noexcept
    {
        switch (level_) {
        case Level::None: return 0.0;
        case Level::SpeedReduction: return 2.0 - *factor_;
        default: return 3.0;
        }
    }

    [[nodiscard]] std::string to_string() const
    {
        switch (level_) {
        case Level::None: return "none";
        case Level::SpeedReduction: return "speed_reduction(" + std::to_string(*factor_) + ")";
        default: return "minimal_risk_maneuver";
        }
    }

    friend bool operator==(const ResponseAction&, const ResponseAction&) = default;

private:
    ResponseAction(Level level, std::optional<double> factor) : level_(level), factor_(factor) {}

    Level level_ = Level::None;
    std::optional<double> factor_;
};

enum class EventKind { Lateral, Longitudinal };

inline const char* to_string(EventKind k) { return k == EventKind::Lateral ? "lateral" : "longitudinal"; }

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

// A detected disagreement between the two systems.
//   score: smoothed Lat peak [m] for lateral, |delta sc| for longitudinal.
//   trigger_stamp: stamp of the input sample that caused the detection.
//   to_class: hazard class reached (longitudinal only).
class CornerCaseEvent {
public:
    CornerCaseEvent(EventKind kind, double stamp, double score, TimeWindow window, double trigger_stamp,
                    std::optional<SpeedClass> to_class = std::nullopt, ResponseAction response = {})
        : kind_(kind), stamp_(stamp), score_(score), window_(window), trigger_stamp_(trigger_stamp),
          to_class_(to_class), response_(response)
    {
        detail::require(detail::finite(stamp) && detail::finite(score) && detail::finite(window.start) &&
                            detail::finite(window.end) && detail::finite(trigger_stamp),
                        "CornerCaseEvent: non-finite value");
        detail::require(window.start <= stamp && stamp <= window.end, "CornerCaseEvent: stamp outside window");
        detail::require(score >= 0.0, "CornerCaseEvent: negative score");
        detail::require(trigger_stamp <= stamp, "CornerCaseEvent: trigger after event");
    }

    [[nodiscard]] EventKind kind() const noexcept { return kind_; }
    [[nodiscard]] double stamp() const noexcept { return stamp_; }
    [[nodiscard]] double score() const noexcept { return score_; }
    [[nodiscard]] TimeWindow window() const noexcept { return window_; }
    [[nodiscard]] double trigger_stamp() const noexcept { return trigger_stamp_; }
    [[nodiscard]] std::optional<SpeedClass> to_class() const noexcept { return to_class_; }
    [[nodiscard]] const ResponseAction& response() const noexcept { return response_; }
    [[nodiscard]] double latency() const noexcept { return stamp_ - trigger_stamp_; }

    [[nodiscard]] CornerCaseEvent with_response(ResponseAction r) const
    {
        CornerCaseEvent e = *this;
        e.response_ = r;
        return e;
    }

    [[nodiscard]] CornerCaseEvent with_window_end(double end) const
    {
        return CornerCaseEvent(kind_, stamp_, score_, {window_.start, end}, trigger_stamp_, to_class_, response_);
    }

    friend bool operator==(const CornerCaseEvent&, const CornerCaseEvent&) = default;

private:
    EventKind kind_;
    double stamp_;
    double score_;
    TimeWindow window_;
    double trigger_stamp_;
    std::optional<SpeedClass> to_class_;
    ResponseAction response_;
};

} // namespace ccd

#pragma once

// Deterministic desk-scale driving simulator that produces the two plan
// streams: a kinematic bicycle ego, static obstacles, one scripted
// pedestrian, a modular planner stub and an end-to-end stub.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ccd/core_model.hpp"
#include "ccd/fusion_response.hpp"
#include "ccd/geometry.hpp"
#include "ccd/run_log.hpp"

namespace ccd::sim {

struct VehicleState {
    Pose2D pose;
    double speed = 0.0;

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct Control {
    double accel = 0.0; // m/s^2
    double steer = 0.0; // rad
};

// x += v cos(th) dt, y += v sin(th) dt, th += v/L tan(steer) dt, v = max(0, v + a dt)
inline VehicleState step_bicycle(const VehicleState& s, Control c, double dt, double wheelbase)
{
    ccd::detail::require(dt > 0.0, "step_bicycle: dt must be > 0");
    ccd::detail::require(wheelbase > 0.0, "step_bicycle: wheelbase must be > 0");
    ccd::detail::require(std::abs(c.steer) < std::numbers::pi / 2.0, "step_bicycle: |steer| must be < pi/2");
    const double th = s.pose.heading();
    const double v = s.speed;
    const double x = s.pose.x() + v * std::cos(th) * dt;
    const double y = s.pose.y() + v * std::sin(th) * dt;
    const double h = wrap_angle(th + v / wheelbase * std::tan(c.steer) * dt);
    return {{x, y, h}, std::max(0.0, v + c.accel * dt)};
}

// Static rectangle; length along heading, width across.
struct Obstacle {
    Pose2D center;
    double length = 4.5;
    double width = 1.8;

    [[nodiscard]] std::array<Vec2, 4> corners() const
    {
        const double c = std::cos(center.heading());
        const double s = std::sin(center.heading());
        const Vec2 along{c * length / 2.0, s * length / 2.0};
        const Vec2 across{-s * width / 2.0, c * width / 2.0};
        const Vec2 o = center.position();
        return {o + along + across, o + along - across, o - along - across, o - along + across};
    }

    friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

// Constant-velocity walker that appears at spawn_time.
struct PedestrianScript {
    Vec2 start;
    Vec2 velocity;
    double spawn_time = 0.0;
    // The modular stub perceives the pedestrian only within this distance.
    double visibility_range = std::numeric_limits<double>::infinity();

    friend bool operator==(const PedestrianScript&, const PedestrianScript&) = default;
};

// Scripted safety-driver takeover: the driver brakes during [start, end).
struct InterventionScript {
    double start = 0.0;
    double end = 0.0;
    double decel = 3.0;

    friend bool operator==(const InterventionScript&, const InterventionScript&) = default;
};

struct PedestrianState {
    Pose2D pose;
    Vec2 velocity;
    double spawn_time = 0.0;
    double visibility_range = std::numeric_limits<double>::infinity();
};

struct WorldState {
    double time = 0.0;
    VehicleState ego;
    std::vector<Obstacle> obstacles;
    std::optional<PedestrianState> pedestrian;
};

inline std::optional<PedestrianState> pedestrian_at(const std::optional<PedestrianScript>& script, double t)
{
    if (!script || t < script->spawn_time) {
        return std::nullopt;
    }
    const Vec2 p = script->start + (t - script->spawn_time) * script->velocity;
    const double heading = norm(script->velocity) > 0.0 ? wrap_angle(std::atan2(script->velocity.y, script->velocity.x)) : 0.0;
    return PedestrianState{{p.x, p.y, heading}, script->velocity, script->spawn_time, script->visibility_range};
}

struct Scenario {
    std::string name;
    ReferencePath reference = ReferencePath::from_points({{0.0, 0.0}, {1.0, 0.0}});
    VehicleState initial;
    double cruise_speed = 8.0;
    std::vector<Obstacle> obstacles;
    std::optional<PedestrianScript> pedestrian;
    std::optional<InterventionScript> intervention;
    double duration = 20.0;
    double dt = 0.05;
    double modular_rate = 10.0;
    double e2e_rate = 2.0;
    std::uint64_t seed = 0;
    double jitter_lateral = 0.0; // m, uniform on e2e waypoints
    double jitter_speed = 0.0;   // m/s, uniform on modular target speeds

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline void validate_scenario(const Scenario& sc)
{
    ccd::detail::require(!sc.name.empty(), "Scenario: empty name");
    ccd::detail::require(sc.duration > 0.0, "Scenario: duration must be > 0");
    ccd::detail::require(sc.dt > 0.0, "Scenario: dt must be > 0");
    ccd::detail::require(sc.modular_rate > 0.0 && sc.e2e_rate > 0.0, "Scenario: rates must be > 0");
    ccd::detail::require(sc.cruise_speed >= 0.0, "Scenario: cruise_speed must be >= 0");
    ccd::detail::require(sc.initial.speed >= 0.0, "Scenario: initial speed must be >= 0");
    ccd::detail::require(sc.jitter_lateral >= 0.0 && sc.jitter_speed >= 0.0, "Scenario: jitter must be >= 0");
    for (const auto& o : sc.obstacles) {
        ccd::detail::require(o.length > 0.0 && o.width > 0.0, "Scenario: obstacle extents must be positive");
    }
    if (sc.pedestrian) {
        ccd::detail::require(sc.pedestrian->visibility_range >= 0.0, "Scenario: visibility_range must be >= 0");
    }
    if (sc.intervention) {
        ccd::detail::require(sc.intervention->start <= sc.intervention->end, "Scenario: intervention ends before it starts");
        ccd::detail::require(sc.intervention->decel >= 0.0, "Scenario: intervention decel must be >= 0");
    }
}

// Harness parameters shared by the stubs and the ego controller.
struct SimConfig {
    double wheelbase = 2.7;
    double vehicle_half_width = 0.9;
    double clearance_margin = 0.5;
    double max_steer = 0.6;
    double max_accel = 2.0;
    double max_decel = 6.0;
    double speed_gain = 1.0;
    double lookahead_min = 4.0;
    double lookahead_gain = 0.8;

    // modular planner stub
    double cruise_speed = 8.0;
    double plan_length = 40.0;
    double plan_spacing = 1.0;
    double bump_peak = 2.0;
    double bump_ramp = 12.0;
    double bump_hold = 3.0;
    double comfort_decel = 3.0;
    double stop_margin = 3.0;

    // hazard corridor and end-to-end stub
    double corridor_half_width = 1.4;
    double prediction_time = 3.0;
    double target_spacing = 5.0;
    std::size_t target_count = 10;
    double emergency_distance = 5.0;
    double pedestrian_range = 15.0;
    double warning_range = 20.0;

    // Shadow mode by default; closed loop applies responses to the ego.
    bool closed_loop = false;
    double response_hold = 2.0;
    double mrm_decel = 4.0;
};

// Points on ref at s_ego + k * spacing, k = 1..count.
inline std::vector<Pose2D> target_points(const ReferencePath& ref, const Pose2D& ego, double spacing, std::size_t count)
{
    ccd::detail::require(spacing > 0.0, "target_points: spacing must be > 0");
    const double s0 = project_point(ref, ego).s;
    if (s0 + spacing * static_cast<double>(count) > ref.length() + 1e-9) {
        throw PathTooShort("target_points: reference ends " + std::to_string(ref.length() - s0) +
                           " m ahead of ego");
    }
    std::vector<Pose2D> out;
    out.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        out.push_back(point_at(ref, s0 + spacing * static_cast<double>(k)));
    }
    return out;
}

namespace detail {

struct Footprint {
    double s_min;
    double s_max;
    double d_min;
    double d_max;
};

inline Footprint footprint(const ReferencePath& path, const Obstacle& o)
{
    Footprint f{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& c : o.corners()) {
        const auto p = project_point(path, c);
        f.s_min = std::min(f.s_min, p.s);
        f.s_max = std::max(f.s_max, p.s);
        f.d_min = std::min(f.d_min, p.d);
        f.d_max = std::max(f.d_max, p.d);
    }
    return f;
}

inline bool overlaps_corridor(const Footprint& f, double half_width)
{
    return f.d_max >= -half_width && f.d_min <= half_width;
}

inline double smoothstep(double u)
{
    u = std::clamp(u, 0.0, 1.0);
    return 0.5 - 0.5 * std::cos(std::numbers::pi * u);
}

// Whether the pedestrian is inside the corridor now or will be within
// the prediction time, assuming constant velocity.
inline bool pedestrian_crossing(const ReferencePath& path, const PedestrianState& p, double half_width,
                                double prediction_time, double s_ego)
{
    constexpr double kStep = 0.25;
    for (double t = 0.0; t <= prediction_time + 1e-9; t += kStep) {
        const Vec2 q = p.pose.position() + t * p.velocity;
        const auto proj = project_point(path, q);
        if (proj.s > s_ego && std::abs(proj.d) <= half_width) {
            return true;
        }
    }
    return false;
}

inline double uniform(std::mt19937_64& rng, double amplitude)
{
    // Fixed mapping from raw engine output; the engine sequence is
    // specified by the standard so the draw is portable.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return amplitude * (2.0 * u - 1.0);
}

} // namespace detail

// Lateral offset the modular stub plans at station s: a smooth bump around
// every obstacle that intrudes on the ego corridor, passing on the side
// away from the obstacle center.
inline double avoidance_offset(const ReferencePath& ref, const std::vector<Obstacle>& obstacles, double s,
                               const SimConfig& cfg)
{
    const double corridor = cfg.vehicle_half_width + cfg.clearance_margin;
    double offset = 0.0;
    for (const auto& o : obstacles) {
        const auto f = detail::footprint(ref, o);
        if (!detail::overlaps_corridor(f, corridor)) {
            continue;
        }
        const bool pass_left = f.d_min + f.d_max <= 0.0;
        const double peak = pass_left ? std::max(cfg.bump_peak, f.d_max + corridor)
                                      : -std::max(cfg.bump_peak, corridor - f.d_min);
        const double a = f.s_min - cfg.bump_hold;
        const double b = f.s_max + cfg.bump_hold;
        double w = 0.0;
        if (s >= a && s <= b) {
            w = 1.0;
        } else if (s < a) {
            w = detail::smoothstep((s - (a - cfg.bump_ramp)) / cfg.bump_ramp);
        } else {
            w = detail::smoothstep(((b + cfg.bump_ramp) - s) / cfg.bump_ramp);
        }
        if (std::abs(peak * w) > std::abs(offset)) {
            offset = peak * w;
        }
    }
    return offset;
}

// Plans along ref from the ego station, swerving around intruding obstacles
// and braking at comfort_decel for a visible pedestrian predicted to cross.
// A pedestrian beyond its visibility_range is not perceived.
inline Trajectory modular_planner_stub(const WorldState& world, const ReferencePath& ref, const SimConfig& cfg,
                                       std::mt19937_64* rng = nullptr, double jitter_speed = 0.0)
{
    const double s0 = project_point(ref, world.ego.pose).s;
    if (s0 + cfg.plan_length > ref.length() + 1e-9) {
        throw PathTooShort("modular_planner_stub: reference ends " + std::to_string(ref.length() - s0) +
                           " m ahead of ego, plan needs " + std::to_string(cfg.plan_length));
    }

    std::optional<double> stop_station;
    if (world.pedestrian) {
        const auto& p = *world.pedestrian;
        const bool visible = norm(p.pose.position() - world.ego.pose.position()) <= p.visibility_range;
        if (visible && detail::pedestrian_crossing(ref, p, cfg.corridor_half_width, cfg.prediction_time, s0)) {
            stop_station = project_point(ref, p.pose).s - cfg.stop_margin;
        }
    }

    const auto count = static_cast<std::size_t>(std::ceil(cfg.plan_length / cfg.plan_spacing - 1e-9));
    std::vector<Vec2> pos;
    std::vector<double> speed;
    pos.reserve(count + 1);
    speed.reserve(count + 1);
    for (std::size_t k = 0; k <= count; ++k) {
        const double s = s0 + std::min(cfg.plan_length, cfg.plan_spacing * static_cast<double>(k));
        pos.push_back(point_at(ref, s, avoidance_offset(ref, world.obstacles, s, cfg)).position());
        double v = cfg.cruise_speed;
        if (stop_station) {
            v = std::min(v, std::sqrt(2.0 * cfg.comfort_decel * std::max(0.0, *stop_station - s)));
        }
        if (rng && jitter_speed > 0.0) {
            v = std::max(0.0, v + detail::uniform(*rng, jitter_speed));
        }
        speed.push_back(v);
    }

    std::vector<TrajectoryPoint> pts;
    pts.reserve(pos.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
        const Vec2 d = k + 1 < pos.size() ? pos[k + 1] - pos[k] : pos[k] - pos[k - 1];
        pts.push_back({{pos[k].x, pos[k].y, wrap_angle(std::atan2(d.y, d.x))}, speed[k]});
    }
    return {world.time, std::move(pts), PlanSource::Modular};
}

struct E2eOutput {
    Trajectory waypoints;
    SpeedClassSample speed_class;
};

// Hazard class from the corridor along the end-to-end waypoints.
// Obstacles and pedestrians are seen regardless of visibility_range.
inline SpeedClass classify_hazard(const WorldState& world, const ReferencePath& corridor, const SimConfig& cfg)
{
    const double s_ego = project_point(corridor, world.ego.pose).s;
    bool emergency = false;
    bool pedestrian = false;
    bool warning = false;

    for (const auto& o : world.obstacles) {
        const auto f = detail::footprint(corridor, o);
        if (f.s_max < s_ego || !detail::overlaps_corridor(f, cfg.corridor_half_width)) {
            continue;
        }
        const double ahead = std::max(0.0, f.s_min - s_ego);
        emergency = emergency || ahead <= cfg.emergency_distance;
        warning = warning || ahead <= cfg.warning_range;
    }
    if (world.pedestrian) {
        const auto& p = *world.pedestrian;
        const auto proj = project_point(corridor, p.pose);
        const double ahead = proj.s - s_ego;
        if (ahead > 0.0) {
            const bool inside = std::abs(proj.d) <= cfg.corridor_half_width;
            emergency = emergency || (inside && ahead <= cfg.emergency_distance);
            pedestrian = pedestrian ||
                         (ahead <= cfg.pedestrian_range &&
                          detail::pedestrian_crossing(corridor, p, cfg.corridor_half_width, cfg.prediction_time, s_ego));
        }
    }
    if (emergency) {
        return SpeedClass(SpeedClass::kBrake);
    }
    if (pedestrian) {
        return SpeedClass(SpeedClass::kPedestrian);
    }
    if (warning) {
        return SpeedClass(SpeedClass::kWarning);
    }
    return SpeedClass(SpeedClass::kOk);
}

// Centerline waypoints through the target points, starting abeam the ego.
// No obstacle avoidance.
inline E2eOutput e2e_stub(const WorldState& world, const std::vector<Pose2D>& targets, const SimConfig& cfg,
                          std::mt19937_64* rng = nullptr, double jitter_lateral = 0.0)
{
    ccd::detail::require(targets.size() >= 2, "e2e_stub: need at least 2 target points");
    const Vec2 t0 = targets[0].position();
    const Vec2 dir = targets[1].position() - t0;
    const Vec2 u = (1.0 / norm(dir)) * dir;
    const double back = dot(world.ego.pose.position() - t0, u);

    std::vector<Vec2> pos;
    pos.reserve(targets.size() + 1);
    if (back < -1e-6) {
        pos.push_back(t0 + back * u);
    }
    for (const auto& t : targets) {
        pos.push_back(t.position());
    }

    // The corridor extends behind the ego so objects already passed project behind it.
    std::vector<Vec2> corridor_pts;
    corridor_pts.reserve(pos.size() + 1);
    corridor_pts.push_back(pos.front() - cfg.target_spacing * u);
    corridor_pts.insert(corridor_pts.end(), pos.begin(), pos.end());
    const auto corridor = ReferencePath::from_points(corridor_pts);
    const SpeedClass sc = classify_hazard(world, corridor, cfg);

    if (rng && jitter_lateral > 0.0) {
        for (std::size_t k = 0; k < pos.size(); ++k) {
            const Vec2 d = k + 1 < pos.size() ? pos[k + 1] - pos[k] : pos[k] - pos[k - 1];
            const Vec2 n{-d.y / norm(d), d.x / norm(d)};
            pos[k] = pos[k] + detail::uniform(*rng, jitter_lateral) * n;
        }
    }

    std::vector<TrajectoryPoint> pts;
    pts.reserve(pos.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
        const Vec2 d = k + 1 < pos.size() ? pos[k + 1] - pos[k] : pos[k] - pos[k - 1];
        pts.push_back({{pos[k].x, pos[k].y, wrap_angle(std::atan2(d.y, d.x))}, std::nullopt});
    }
    return {Trajectory(world.time, std::move(pts), PlanSource::EndToEnd), SpeedClassSample(world.time, sc)};
}

// Pure pursuit on the plan geometry plus a proportional speed loop.
inline Control track_plan(const VehicleState& ego, const Trajectory& plan, double target_speed, const SimConfig& cfg)
{
    const double lookahead = std::max(cfg.lookahead_min, cfg.lookahead_gain * ego.speed);
    const auto& pts = plan.points();
    Vec2 goal = pts.back().pose.position();
    double walked = 0.0;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const Vec2 a = pts[k].pose.position();
        const Vec2 b = pts[k + 1].pose.position();
        const double len = norm(b - a);
        if (walked + len >= lookahead) {
            goal = a + ((lookahead - walked) / len) * (b - a);
            break;
        }
        walked += len;
    }
    const Vec2 rel = goal - ego.pose.position();
    const double alpha = wrap_angle(std::atan2(rel.y, rel.x) - ego.pose.heading());
    const double ld = std::max(norm(rel), 1e-3);
    const double steer = std::clamp(std::atan(2.0 * cfg.wheelbase * std::sin(alpha) / ld), -cfg.max_steer, cfg.max_steer);
    const double accel = std::clamp(cfg.speed_gain * (target_speed - ego.speed), -cfg.max_decel, cfg.max_accel);
    return {accel, steer};
}

namespace detail {

inline std::int64_t to_micros(double seconds) { return std::llround(seconds * 1e6); }
inline double from_micros(std::int64_t us) { return static_cast<double>(us) / 1e6; }

} // namespace detail

// Fixed-step loop: modular stub at modular_rate, end-to-end stub at
// e2e_rate, ego tracking the modular plan. The shadow monitor's events are
// logged; in closed-loop mode their responses act on the ego.
inline RunLog run_scenario(const Scenario& sc, const SimConfig& base_cfg = {}, const DetectorConfig& det_cfg = {})
{
    validate_scenario(sc);
    validate_config(det_cfg);
    SimConfig cfg = base_cfg;
    cfg.cruise_speed = sc.cruise_speed;

    const std::int64_t dt_us = detail::to_micros(sc.dt);
    const std::int64_t steps = std::llround(sc.duration / sc.dt);
    const std::int64_t mod_every = std::llround(1.0 / (sc.modular_rate * sc.dt));
    const std::int64_t e2e_every = std::llround(1.0 / (sc.e2e_rate * sc.dt));
    ccd::detail::require(dt_us > 0 && mod_every >= 1 && e2e_every >= 1,
                    "run_scenario: rates must be at most 1/dt");

    RunLog log;
    log.header.scenario = sc.name;
    log.header.config = det_cfg;
    log.header.reference = sc.reference.vertices();

    std::mt19937_64 rng(sc.seed);
    const bool jitter = sc.jitter_lateral > 0.0 || sc.jitter_speed > 0.0;

    WorldState world;
    world.ego = sc.initial;
    world.obstacles = sc.obstacles;

    StreamAligner aligner(det_cfg);
    Monitor monitor(sc.reference, det_cfg);
    std::optional<Trajectory> plan;
    bool intervention_started = false;
    bool intervention_ended = false;
    double response_factor = 1.0;
    double response_until = -std::numeric_limits<double>::infinity();
    bool mrm = false;

    for (std::int64_t k = 0; k < steps; ++k) {
        const double t = detail::from_micros(k * dt_us);
        world.time = t;
        world.pedestrian = pedestrian_at(sc.pedestrian, t);

        log.records.push_back(WorldTruthRecord{t, world.ego.pose, world.ego.speed,
                                               world.pedestrian ? std::optional<Pose2D>(world.pedestrian->pose)
                                                                : std::nullopt});
        bool intervening = false;
        if (sc.intervention) {
            if (!intervention_started && t >= sc.intervention->start) {
                intervention_started = true;
                log.records.push_back(InterventionRecord{t, InterventionPhase::Start});
            }
            if (intervention_started && !intervention_ended && t >= sc.intervention->end) {
                intervention_ended = true;
                log.records.push_back(InterventionRecord{t, InterventionPhase::End});
            }
            intervening = intervention_started && !intervention_ended;
        }

        if (k % e2e_every == 0) {
            const auto targets = target_points(sc.reference, world.ego.pose, cfg.target_spacing, cfg.target_count);
            auto out = e2e_stub(world, targets, cfg, jitter ? &rng : nullptr, sc.jitter_lateral);
            log.records.push_back(E2ePlanRecord{out.waypoints});
            log.records.push_back(SpeedClassRecord{out.speed_class});
            aligner.push_e2e(E2eSample::from(std::move(out.waypoints), out.speed_class));
        }

        if (k % mod_every == 0) {
            plan = modular_planner_stub(world, sc.reference, cfg, jitter ? &rng : nullptr, sc.jitter_speed);
            log.records.push_back(ModularPlanRecord{*plan});
            if (auto frame = aligner.push_modular(ModularSample::from(*plan))) {
                for (const auto& e : monitor.process(*frame)) {
                    log.records.push_back(EventRecord{e});
                    if (cfg.closed_loop) {
                        if (e.response().level() == ResponseAction::Level::MinimalRiskManeuver) {
                            mrm = true;
                        } else if (auto f = e.response().factor()) {
                            response_factor = std::min(response_factor, *f);
                            response_until = t + cfg.response_hold;
                        }
                    }
                }
            }
        }

        if (t > response_until) {
            response_factor = 1.0;
        }
        Control u = track_plan(world.ego, *plan, *plan->points().front().target_speed * response_factor, cfg);
        if (mrm) {
            u.accel = -cfg.mrm_decel;
        }
        if (intervening) {
            u.accel = -sc.intervention->decel;
        }
        world.ego = step_bicycle(world.ego, u, sc.dt, cfg.wheelbase);
    }
    return log;
}

} // namespace ccd::sim

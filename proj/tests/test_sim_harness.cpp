#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ccd/bundled_scenarios.hpp"
#include "ccd/lateral_detector.hpp"
#include "ccd/replay.hpp"
#include "ccd/sim_harness.hpp"
#include "oracles.hpp"

using namespace ccd;
using namespace ccd::sim;

namespace {

const ReferencePath& straight_road()
{
    static const auto ref = ReferencePath::from_points({{0, 0}, {300, 0}});
    return ref;
}

WorldState world_at(double x, double speed = 8.0)
{
    WorldState w;
    w.ego = {{x, 0.0, 0.0}, speed};
    return w;
}

template <class Rec>
std::size_t count_of(const RunLog& log)
{
    return static_cast<std::size_t>(
        std::count_if(log.records.begin(), log.records.end(), [](const LogRecord& r) { return std::holds_alternative<Rec>(r); }));
}

double max_abs_offset(const Trajectory& t, const ReferencePath& ref)
{
    double m = 0.0;
    for (const auto& p : t.points()) {
        m = std::max(m, std::abs(project_point(ref, p.pose).d));
    }
    return m;
}

} // namespace

TEST(StepBicycle, StraightAdvance)
{
    const auto s = step_bicycle({{0, 0, 0}, 5.0}, {0.0, 0.0}, 0.1, 2.7);
    EXPECT_DOUBLE_EQ(s.pose.x(), 0.5);
    EXPECT_EQ(s.pose.y(), 0.0);
    EXPECT_EQ(s.pose.heading(), 0.0);
    EXPECT_EQ(s.speed, 5.0);
}

TEST(StepBicycle, RestIsFixedPoint)
{
    const VehicleState s0{{3, 4, 1.0}, 0.0};
    EXPECT_EQ(step_bicycle(s0, {0.0, 0.3}, 0.1, 2.7), s0);
    // braking never produces negative speed
    EXPECT_EQ(step_bicycle(s0, {-5.0, 0.0}, 0.1, 2.7).speed, 0.0);
}

TEST(StepBicycle, ConstantSteerTracesCircle)
{
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> steer(-0.5, 0.5);
    std::uniform_real_distribution<double> speed(1.0, 12.0);
    int cases = 0;
    while (cases < 200) {
        const double delta = steer(rng);
        if (std::abs(delta) < 0.05) {
            continue;
        }
        const double L = 2.7;
        const double want = L / std::tan(std::abs(delta));
        VehicleState s{{0, 0, 0}, speed(rng)};
        std::vector<oracle::P> pts{{0, 0}};
        for (int k = 0; k < 100; ++k) {
            s = step_bicycle(s, {0.0, delta}, 0.01, L);
            pts.push_back({s.pose.x(), s.pose.y()});
        }
        const double r = oracle::circumradius(pts[0], pts[50], pts[100]);
        EXPECT_LE(std::abs(r - want) / want, 0.01) << "steer " << delta;
        ++cases;
    }
}

TEST(StepBicycle, RejectsBadArguments)
{
    const VehicleState s{{0, 0, 0}, 1.0};
    EXPECT_THROW(step_bicycle(s, {0, 0}, 0.0, 2.7), InvalidArgument);
    EXPECT_THROW(step_bicycle(s, {0, 0}, 0.1, 0.0), InvalidArgument);
    EXPECT_THROW(step_bicycle(s, {0, std::numbers::pi / 2.0}, 0.1, 2.7), InvalidArgument);
}

TEST(TargetPoints, StraightFromEgoProjection)
{
    auto pts = target_points(straight_road(), {0, 0, 0}, 10.0, 3);
    ASSERT_EQ(pts.size(), 3U);
    EXPECT_DOUBLE_EQ(pts[0].x(), 10.0);
    EXPECT_DOUBLE_EQ(pts[1].x(), 20.0);
    EXPECT_DOUBLE_EQ(pts[2].x(), 30.0);
    pts = target_points(straight_road(), {100, 1.5, 0}, 10.0, 2);
    EXPECT_DOUBLE_EQ(pts[0].x(), 110.0);
    EXPECT_DOUBLE_EQ(pts[0].y(), 0.0);
    EXPECT_THROW(target_points(straight_road(), {290, 0, 0}, 10.0, 3), PathTooShort);
}

TEST(TargetPoints, CurvedReferenceExactArcLength)
{
    std::vector<Vec2> v;
    std::vector<oracle::P> o;
    for (int k = 0; k <= 180; ++k) {
        const double a = k * std::numbers::pi / 360.0;
        v.push_back({40.0 * std::sin(a), 40.0 - 40.0 * std::cos(a)});
        o.push_back({v.back().x, v.back().y});
    }
    const auto ref = ReferencePath::from_points(v);
    const auto ego = point_at(ref, 7.25);
    const auto pts = target_points(ref, ego, 4.0, 8);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const auto q = oracle::walk(o, 7.25 + 4.0 * static_cast<double>(k + 1));
        EXPECT_NEAR(pts[k].x(), q.x, 1e-9);
        EXPECT_NEAR(pts[k].y(), q.y, 1e-9);
    }
}

TEST(ModularStub, EmptyWorldFollowsReferenceAtCruise)
{
    const SimConfig cfg;
    const auto t = modular_planner_stub(world_at(10.0), straight_road(), cfg);
    EXPECT_EQ(max_abs_offset(t, straight_road()), 0.0);
    for (const auto& p : t.points()) {
        EXPECT_EQ(*p.target_speed, cfg.cruise_speed);
    }
    EXPECT_DOUBLE_EQ(t.points().front().pose.x(), 10.0);
    EXPECT_DOUBLE_EQ(t.points().back().pose.x(), 10.0 + cfg.plan_length);
}

TEST(ModularStub, ParkedVehicleBumpPeaksNearObstacle)
{
    const SimConfig cfg;
    auto w = world_at(0.0);
    // intrudes from the right, so the configured 2 m bump already clears it
    w.obstacles.push_back({{20.0, -1.0, 0.0}, 4.5, 1.8});
    const auto t = modular_planner_stub(w, straight_road(), cfg);
    double peak = 0.0;
    double peak_x = 0.0;
    for (const auto& p : t.points()) {
        if (p.pose.y() > peak) {
            peak = p.pose.y();
            peak_x = p.pose.x();
        }
    }
    EXPECT_NEAR(peak, cfg.bump_peak, 1e-12);
    EXPECT_GE(peak_x, 20.0 - 2.25 - cfg.bump_hold);
    EXPECT_LE(peak_x, 20.0 + 2.25 + cfg.bump_hold);
    // bump shape: smooth ramp in from zero well before the obstacle
    EXPECT_EQ(t.points().front().pose.y(), 0.0);
}

TEST(ModularStub, CenteredObstacleGetsFullClearance)
{
    const SimConfig cfg;
    auto w = world_at(0.0);
    w.obstacles.push_back({{20.0, 0.0, 0.0}, 4.5, 1.8});
    const auto t = modular_planner_stub(w, straight_road(), cfg);
    const double need = 0.9 + cfg.vehicle_half_width + cfg.clearance_margin;
    EXPECT_NEAR(max_abs_offset(t, straight_road()), std::max(cfg.bump_peak, need), 1e-12);
}

TEST(ModularStub, HiddenPedestrianKeepsCruise)
{
    const SimConfig cfg;
    auto w = world_at(0.0);
    w.pedestrian = PedestrianState{{20.0, -1.0, std::numbers::pi / 2.0}, {0.0, 1.4}, 0.0, 3.0};
    auto t = modular_planner_stub(w, straight_road(), cfg);
    for (const auto& p : t.points()) {
        EXPECT_EQ(*p.target_speed, cfg.cruise_speed);
    }
    // the same pedestrian in plain sight makes it brake to a stop
    w.pedestrian->visibility_range = 100.0;
    t = modular_planner_stub(w, straight_road(), cfg);
    const double stop = 20.0 - cfg.stop_margin;
    for (const auto& p : t.points()) {
        const double want = std::min(cfg.cruise_speed, std::sqrt(2.0 * cfg.comfort_decel * std::max(0.0, stop - p.pose.x())));
        EXPECT_NEAR(*p.target_speed, want, 1e-9) << p.pose.x();
    }
    EXPECT_EQ(*t.points().back().target_speed, 0.0);
}

TEST(ModularStub, NearEndOfReference)
{
    EXPECT_THROW(modular_planner_stub(world_at(270.0), straight_road(), SimConfig{}), PathTooShort);
}

TEST(E2eStub, EmptyWorldIsOk)
{
    const SimConfig cfg;
    const auto w = world_at(0.0);
    const auto out = e2e_stub(w, target_points(straight_road(), w.ego.pose, 5.0, 10), cfg);
    EXPECT_EQ(out.speed_class.sc.value(), SpeedClass::kOk);
    EXPECT_EQ(max_abs_offset(out.waypoints, straight_road()), 0.0);
    EXPECT_FALSE(out.waypoints.points().front().target_speed);
}

TEST(E2eStub, PedestrianAheadOnCorridor)
{
    const SimConfig cfg;
    auto w = world_at(0.0);
    w.pedestrian = PedestrianState{{8.0, 0.5, 0.0}, {0.0, 0.0}, 0.0, 0.0};
    const auto out = e2e_stub(w, target_points(straight_road(), w.ego.pose, 5.0, 10), cfg);
    EXPECT_EQ(out.speed_class.sc.value(), SpeedClass::kPedestrian);
}

TEST(E2eStub, ParkedCarInWarningRange)
{
    const SimConfig cfg;
    auto w = world_at(0.0);
    w.obstacles.push_back({{12.0 + 2.25, -1.0, 0.0}, 4.5, 1.8});
    auto out = e2e_stub(w, target_points(straight_road(), w.ego.pose, 5.0, 10), cfg);
    EXPECT_EQ(out.speed_class.sc.value(), SpeedClass::kWarning);
    // the waypoints ignore it
    EXPECT_EQ(max_abs_offset(out.waypoints, straight_road()), 0.0);
    w.obstacles[0] = {{4.0 + 2.25, -1.0, 0.0}, 4.5, 1.8};
    out = e2e_stub(w, target_points(straight_road(), w.ego.pose, 5.0, 10), cfg);
    EXPECT_EQ(out.speed_class.sc.value(), SpeedClass::kBrake);
    w.obstacles[0] = {{40.0, -1.0, 0.0}, 4.5, 1.8};
    out = e2e_stub(w, target_points(straight_road(), w.ego.pose, 5.0, 10), cfg);
    EXPECT_EQ(out.speed_class.sc.value(), SpeedClass::kOk);
}

TEST(RunScenario, BundledScenariosCompleteWithRates)
{
    for (const auto& b : bundled_scenarios()) {
        const auto sc = bundled_scenario(b.name);
        RunLog log;
        ASSERT_NO_THROW(log = run_scenario(sc)) << b.name;
        const double e2e_want = sc.duration * sc.e2e_rate;
        const double mod_want = sc.duration * sc.modular_rate;
        EXPECT_LE(std::abs(static_cast<double>(count_of<E2ePlanRecord>(log)) - e2e_want), 1.0) << b.name;
        EXPECT_LE(std::abs(static_cast<double>(count_of<SpeedClassRecord>(log)) - e2e_want), 1.0) << b.name;
        EXPECT_LE(std::abs(static_cast<double>(count_of<ModularPlanRecord>(log)) - mod_want), 1.0) << b.name;
        double last = -1.0;
        for (const auto& r : log.records) {
            EXPECT_GE(record_stamp(r), last);
            last = record_stamp(r);
        }
        EXPECT_LT(last, sc.duration);
    }
}

TEST(RunScenario, Deterministic)
{
    auto sc = bundled_scenario("overtake_parked_vehicle");
    sc.jitter_lateral = 0.05;
    sc.jitter_speed = 0.02;
    sc.seed = 77;
    const auto a = write_log_string(run_scenario(sc));
    const auto b = write_log_string(run_scenario(sc));
    EXPECT_EQ(a, b);
    sc.seed = 78;
    EXPECT_NE(a, write_log_string(run_scenario(sc)));
}

TEST(RunScenario, NominalStraightStubsAgree)
{
    const auto log = run_scenario(bundled_scenario("nominal_straight"));
    const auto r = replay(log, log.header.config);
    EXPECT_TRUE(r.events().empty());
    for (const auto& row : r.detection.rows) {
        ASSERT_TRUE(row.lateral);
        EXPECT_LT(row.lateral->lat(), 1e-9);
        EXPECT_FALSE(row.longitudinal.long_flag);
    }
}

TEST(RunScenario, OvertakeE2eStaysCenteredWhileModularSwerves)
{
    const auto sc = bundled_scenario("overtake_parked_vehicle");
    const auto log = run_scenario(sc);
    double e2e_max = 0.0;
    double mod_max = 0.0;
    for (const auto& r : log.records) {
        if (const auto* e = std::get_if<E2ePlanRecord>(&r)) {
            e2e_max = std::max(e2e_max, max_abs_offset(e->trajectory, sc.reference));
        }
        if (const auto* m = std::get_if<ModularPlanRecord>(&r)) {
            mod_max = std::max(mod_max, max_abs_offset(m->trajectory, sc.reference));
        }
    }
    EXPECT_LE(e2e_max, 0.1);
    EXPECT_GT(mod_max, 1.5);
}

TEST(RunScenario, PedestrianClassDropsWhileModularHoldsSpeed)
{
    const auto sc = bundled_scenario("pedestrian_crossing");
    const auto log = run_scenario(sc);
    const auto r = replay(log, log.header.config);
    std::optional<double> drop;
    for (const auto& row : r.detection.rows) {
        if (!drop && row.longitudinal.sc.value() < SpeedClass::kOk) {
            drop = row.stamp;
        }
        if (row.stamp <= sc.intervention->end) {
            EXPECT_EQ(row.longitudinal.v, sc.cruise_speed) << row.stamp;
        }
    }
    ASSERT_TRUE(drop);
    EXPECT_GT(*drop, sc.pedestrian->spawn_time);
    std::optional<double> start;
    for (const auto& rec : log.records) {
        if (const auto* i = std::get_if<InterventionRecord>(&rec); i && i->phase == InterventionPhase::Start) {
            start = i->stamp;
        }
    }
    ASSERT_TRUE(start);
    EXPECT_DOUBLE_EQ(*start, sc.intervention->start);
}

TEST(RunScenario, ClosedLoopResponsesSlowTheEgo)
{
    const auto sc = bundled_scenario("overtake_parked_vehicle");
    SimConfig shadow;
    SimConfig closed;
    closed.closed_loop = true;
    auto min_speed = [](const RunLog& log) {
        double m = 1e9;
        for (const auto& r : log.records) {
            if (const auto* w = std::get_if<WorldTruthRecord>(&r)) {
                m = std::min(m, w->speed);
            }
        }
        return m;
    };
    EXPECT_EQ(min_speed(run_scenario(sc, shadow)), sc.cruise_speed);
    EXPECT_LT(min_speed(run_scenario(sc, closed)), sc.cruise_speed);
}

TEST(Scenario, ValidationRejectsBadValues)
{
    auto sc = bundled_scenario("nominal_straight");
    sc.duration = 0.0;
    EXPECT_THROW(validate_scenario(sc), InvalidArgument);
    sc = bundled_scenario("nominal_straight");
    sc.obstacles.push_back({{10, 0, 0}, 0.0, 1.0});
    EXPECT_THROW(validate_scenario(sc), InvalidArgument);
}

#include <array>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "ccd/longitudinal_detector.hpp"

using namespace ccd;

namespace {

using Pair = std::pair<SpeedClassSample, PlanSample>;

std::vector<Pair> stream(const std::vector<int>& classes, const std::vector<double>& speeds, double dt = 0.5)
{
    std::vector<Pair> out;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const double t = dt * static_cast<double>(i);
        out.emplace_back(SpeedClassSample(t, SpeedClass(classes[i])), PlanSample(t, speeds[i]));
    }
    return out;
}

// Hand-written flag table, indexed [dv][prev][curr] with dv in {-1, 0, +1}.
// A 1 marks a worsening class (curr < prev) while the speed is not reduced.
constexpr std::array<std::array<std::array<int, 4>, 4>, 3> kTruth = {{
    // dv = -1: the modular system is braking, never flagged
    {{{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}},
    // dv = 0
    {{{0, 0, 0, 0}, {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0}}},
    // dv = +1
    {{{0, 0, 0, 0}, {1, 0, 0, 0}, {1, 1, 0, 0}, {1, 1, 1, 0}}},
}};

} // namespace

TEST(DeltaSc, Examples)
{
    EXPECT_EQ(delta_sc(SpeedClass(2), SpeedClass(3)), -1);
    EXPECT_EQ(delta_sc(SpeedClass(2), SpeedClass(2)), 0);
    EXPECT_EQ(delta_sc(SpeedClass(3), SpeedClass(1)), 2);
}

TEST(DeltaV, DeadbandRule)
{
    EXPECT_EQ(delta_v(5.0, 5.0, 0.05), 0.0);
    EXPECT_DOUBLE_EQ(delta_v(4.5, 5.0, 0.05), -0.5);
    EXPECT_EQ(delta_v(5.02, 5.0, 0.05), 0.0);
    // outside the band the raw difference comes through unchanged
    for (double curr = 3.0; curr <= 7.0; curr += 0.013) {
        const double raw = curr - 5.0;
        const double got = delta_v(curr, 5.0, 0.05);
        if (std::abs(raw) > 0.05) {
            EXPECT_EQ(got, raw);
        } else {
            EXPECT_EQ(got, 0.0);
        }
    }
}

TEST(LongFlag, Examples)
{
    EXPECT_TRUE(long_flag(-1, 0.0));
    EXPECT_FALSE(long_flag(-1, -0.5));
    EXPECT_FALSE(long_flag(0, 0.0));
    EXPECT_TRUE(long_flag(-2, 0.3));
}

TEST(LongFlag, ExhaustiveTruthTable)
{
    int mismatches = 0;
    int cases = 0;
    for (int dvi = 0; dvi < 3; ++dvi) {
        for (int prev = 0; prev <= 3; ++prev) {
            for (int curr = 0; curr <= 3; ++curr) {
                const double dv = static_cast<double>(dvi - 1);
                const bool got = long_flag(delta_sc(SpeedClass(curr), SpeedClass(prev)), dv);
                mismatches += (got ? 1 : 0) != kTruth[dvi][prev][curr];
                ++cases;
            }
        }
    }
    EXPECT_EQ(cases, 48);
    EXPECT_EQ(mismatches, 0);
}

TEST(LongFlag, RelabelingInvariance)
{
    // Any strictly increasing relabeling of {0..3} preserves the sign of the
    // class difference and with it the flag.
    std::mt19937 rng(17);
    for (int c = 0; c < 200; ++c) {
        std::array<int, 4> map{};
        int next = static_cast<int>(rng() % 5) - 2;
        for (auto& m : map) {
            next += 1 + static_cast<int>(rng() % 6);
            m = next;
        }
        for (int prev = 0; prev <= 3; ++prev) {
            for (int curr = 0; curr <= 3; ++curr) {
                for (const double dv : {-1.0, 0.0, 1.0}) {
                    EXPECT_EQ(long_flag(curr - prev, dv), long_flag(map[curr] - map[prev], dv));
                }
            }
        }
    }
}

TEST(LongFlag, DeadbandContinuity)
{
    // With a worsening class, the flag flips only at prev - deadband.
    const double prev = 6.0;
    const double band = 0.05;
    for (double curr = 5.0; curr <= 7.0; curr += 0.001) {
        const bool flag = long_flag(-1, delta_v(curr, prev, band));
        EXPECT_EQ(flag, curr >= prev - band) << curr;
    }
}

TEST(DetectLongitudinal, ConstantClassNoEvents)
{
    const auto s = stream({3, 3, 3, 3, 3}, {8, 8, 8, 8, 8});
    EXPECT_TRUE(detect_longitudinal(s, DetectorConfig{}).empty());
}

TEST(DetectLongitudinal, DropWhileSpeedHeld)
{
    const auto s = stream({3, 3, 3, 3, 1, 1, 1}, {4, 4, 4, 4, 4, 4, 4});
    const auto ev = detect_longitudinal(s, DetectorConfig{});
    ASSERT_EQ(ev.size(), 1U);
    EXPECT_EQ(ev[0].kind(), EventKind::Longitudinal);
    EXPECT_DOUBLE_EQ(ev[0].stamp(), 2.0);
    EXPECT_DOUBLE_EQ(ev[0].score(), 2.0);
    EXPECT_EQ(ev[0].to_class()->value(), 1);
    EXPECT_DOUBLE_EQ(ev[0].latency(), 0.0);
}

TEST(DetectLongitudinal, NoEventWhenBraking)
{
    const auto s = stream({2, 2, 1, 1}, {4, 4, 3, 3});
    EXPECT_TRUE(detect_longitudinal(s, DetectorConfig{}).empty());
}

TEST(DetectLongitudinal, ImprovementNeverTriggers)
{
    const auto s = stream({0, 1, 2, 3}, {8, 9, 10, 11});
    EXPECT_TRUE(detect_longitudinal(s, DetectorConfig{}).empty());
}

TEST(DetectLongitudinal, FirstSampleNeverFlagged)
{
    LongitudinalDetector det(DetectorConfig{});
    const auto step = det.step(SpeedClassSample(0.0, SpeedClass(0)), PlanSample(0.0, 10.0));
    EXPECT_FALSE(step.sample.long_flag);
    EXPECT_FALSE(step.opened);
}

TEST(DetectLongitudinal, PersistenceAndWindow)
{
    // classes worsen on three consecutive steps
    const auto s = stream({3, 2, 1, 0, 0}, {5, 5, 5, 5, 5});
    DetectorConfig cfg;
    auto ev = detect_longitudinal(s, cfg);
    ASSERT_EQ(ev.size(), 1U);
    EXPECT_DOUBLE_EQ(ev[0].stamp(), 0.5);
    EXPECT_DOUBLE_EQ(ev[0].window().start, 0.5);
    EXPECT_DOUBLE_EQ(ev[0].window().end, 1.5);

    cfg.long_persistence = 3;
    ev = detect_longitudinal(s, cfg);
    ASSERT_EQ(ev.size(), 1U);
    EXPECT_DOUBLE_EQ(ev[0].stamp(), 1.5);
    EXPECT_DOUBLE_EQ(ev[0].trigger_stamp(), 0.5);
    EXPECT_DOUBLE_EQ(ev[0].window().start, 0.5);

    cfg.long_persistence = 4;
    EXPECT_TRUE(detect_longitudinal(s, cfg).empty());
}

TEST(DetectLongitudinal, Errors)
{
    auto s = stream({3, 2}, {5, 5});
    s[1].first = SpeedClassSample(10.0, SpeedClass(2));
    EXPECT_THROW(detect_longitudinal(s, DetectorConfig{}), AlignmentSkew);
    auto u = stream({3, 2, 2}, {5, 5, 5});
    std::swap(u[1], u[2]);
    EXPECT_THROW(detect_longitudinal(u, DetectorConfig{}), UnorderedInput);
}

TEST(DetectLongitudinal, Reproducible)
{
    std::mt19937 rng(1);
    std::vector<int> cls;
    std::vector<double> v;
    for (int i = 0; i < 500; ++i) {
        cls.push_back(static_cast<int>(rng() % 4));
        v.push_back(static_cast<double>(rng() % 100) / 10.0);
    }
    const auto s = stream(cls, v, 0.1);
    const auto a = detect_longitudinal(s, DetectorConfig{});
    const auto b = detect_longitudinal(s, DetectorConfig{});
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b);
}

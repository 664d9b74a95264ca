#pragma once

// Longitudinal disagreement: the end-to-end hazard class worsens while the
// modular target speed does not decrease.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ccd/core_model.hpp"

namespace ccd {

struct LongitudinalSample {
    double stamp = 0.0;
    SpeedClass sc{SpeedClass::kOk};
    double v = 0.0;
    int delta_sc = 0;
    double delta_v = 0.0;
    bool long_flag = false;

    friend bool operator==(const LongitudinalSample&, const LongitudinalSample&) = default;
};

// Backward difference of the hazard class; negative means more hazardous.
inline int delta_sc(SpeedClass curr, SpeedClass prev) { return curr.value() - prev.value(); }

inline double delta_v(double curr, double prev, double deadband)
{
    detail::require(deadband >= 0.0, "delta_v: deadband must be >= 0");
    const double raw = curr - prev;
    return std::abs(raw) <= deadband ? 0.0 : raw;
}

inline bool long_flag(int dsc, double dv) { return dsc < 0 && dv >= 0.0; }

// One stream's detector state: the previous aligned sample plus the current
// flagged run. An event fires when long_persistence consecutive samples
// are flagged; its window grows until the run ends.
class LongitudinalDetector {
public:
    struct Step {
        LongitudinalSample sample;
        std::optional<CornerCaseEvent> opened;
        std::optional<CornerCaseEvent> closed;
    };

    explicit LongitudinalDetector(const DetectorConfig& cfg) : cfg_(validate_config(cfg)) {}

    Step step(const SpeedClassSample& sc, const PlanSample& plan)
    {
        if (std::abs(sc.stamp - plan.stamp) > cfg_.align_tolerance + kStampEpsilon) {
            throw AlignmentSkew("speed class and plan sample differ by more than align_tolerance");
        }
        if (prev_ && !(plan.stamp > prev_->stamp)) {
            throw UnorderedInput("longitudinal pairs must be strictly increasing in stamp");
        }

        Step out;
        LongitudinalSample& s = out.sample;
        s.stamp = plan.stamp;
        s.sc = sc.sc;
        s.v = plan.v;
        if (prev_) {
            s.delta_sc = delta_sc(sc.sc, prev_->sc);
            s.delta_v = delta_v(plan.v, prev_->v, cfg_.v_deadband);
            s.long_flag = long_flag(s.delta_sc, s.delta_v);
        }
        prev_ = s;

        if (s.long_flag) {
            if (!in_run_) {
                run_ = Run{s.stamp, s.stamp, sc.stamp, 0, std::nullopt};
                in_run_ = true;
            }
            run_.end = s.stamp;
            ++run_.count;
            if (run_.count == cfg_.long_persistence) {
                run_.event = CornerCaseEvent(EventKind::Longitudinal, s.stamp, std::abs(s.delta_sc),
                                             {run_.start, s.stamp}, run_.trigger, s.sc);
                out.opened = run_.event;
            }
        } else if (in_run_) {
            out.closed = close_run();
        }
        return out;
    }

    std::optional<CornerCaseEvent> finish() { return in_run_ ? close_run() : std::nullopt; }

    void reset()
    {
        prev_.reset();
        run_ = Run{};
        in_run_ = false;
    }

private:
    struct Run {
        double start = 0.0;
        double end = 0.0;
        double trigger = 0.0; // speed-class stamp of the first flagged sample
        std::size_t count = 0;
        std::optional<CornerCaseEvent> event;
    };

    std::optional<CornerCaseEvent> close_run()
    {
        std::optional<CornerCaseEvent> e;
        if (run_.event) {
            e = run_.event->with_window_end(run_.end);
        }
        run_ = Run{};
        in_run_ = false;
        return e;
    }

    DetectorConfig cfg_;
    std::optional<LongitudinalSample> prev_;
    Run run_;
    bool in_run_ = false;
};

inline std::vector<CornerCaseEvent> detect_longitudinal(std::span<const std::pair<SpeedClassSample, PlanSample>> pairs,
                                                        const DetectorConfig& cfg)
{
    LongitudinalDetector det(cfg);
    std::vector<CornerCaseEvent> events;
    for (const auto& [sc, plan] : pairs) {
        auto step = det.step(sc, plan);
        if (step.closed) {
            events.push_back(*step.closed);
        }
    }
    if (auto e = det.finish()) {
        events.push_back(*e);
    }
    return events;
}

} // namespace ccd

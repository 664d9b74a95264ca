#pragma once

// Joins the modular and end-to-end plan streams on their stamps, runs both
// detectors per aligned frame and grades each event into a response.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccd/core_model.hpp"
#include "ccd/geometry.hpp"
#include "ccd/lateral_detector.hpp"
#include "ccd/longitudinal_detector.hpp"

namespace ccd {

struct ModularSample {
    Trajectory trajectory;
    PlanSample plan;

    // v is the target speed of the first plan point: the speed the
    // controller executes next.
    static ModularSample from(Trajectory traj)
    {
        detail::require(traj.source() == PlanSource::Modular, "ModularSample: trajectory is not modular");
        PlanSample plan(traj.stamp(), *traj.points().front().target_speed);
        return {std::move(traj), plan};
    }

    [[nodiscard]] double stamp() const noexcept { return trajectory.stamp(); }
};

struct E2eSample {
    Trajectory trajectory;
    SpeedClassSample speed_class;

    static E2eSample from(Trajectory traj, SpeedClassSample sc)
    {
        detail::require(traj.source() == PlanSource::EndToEnd, "E2eSample: trajectory is not end-to-end");
        return {std::move(traj), sc};
    }

    [[nodiscard]] double stamp() const noexcept { return trajectory.stamp(); }
};

namespace detail {

inline double frame_skew(const ModularSample& m, const E2eSample& e)
{
    const double a = m.stamp();
    const double b = e.stamp();
    const double c = e.speed_class.stamp;
    return std::max({a, b, c}) - std::min({a, b, c});
}

} // namespace detail

class AlignedFrame {
public:
    AlignedFrame(ModularSample mod, E2eSample e2e, double align_tolerance)
        : mod_(std::move(mod)), e2e_(std::move(e2e))
    {
        skew_ = detail::frame_skew(mod_, e2e_);
        if (skew_ > align_tolerance + kStampEpsilon) {
            throw AlignmentSkew("aligned frame skew " + std::to_string(skew_) + " s exceeds tolerance");
        }
    }

    [[nodiscard]] double stamp() const noexcept { return mod_.stamp(); }
    [[nodiscard]] double skew() const noexcept { return skew_; }
    [[nodiscard]] const Trajectory& mod_traj() const noexcept { return mod_.trajectory; }
    [[nodiscard]] const PlanSample& plan() const noexcept { return mod_.plan; }
    [[nodiscard]] const Trajectory& e2e_traj() const noexcept { return e2e_.trajectory; }
    [[nodiscard]] const SpeedClassSample& e2e_sc() const noexcept { return e2e_.speed_class; }

private:
    ModularSample mod_;
    E2eSample e2e_;
    double skew_ = 0.0;
};

struct AlignmentResult {
    std::vector<AlignedFrame> frames;
    std::size_t dropped = 0;
    std::size_t total = 0; // modular samples seen; frames.size() + dropped == total
};

namespace detail {

template <typename Sample>
void require_increasing(std::span<const Sample> stream, const char* name)
{
    for (std::size_t i = 1; i < stream.size(); ++i) {
        if (!(stream[i].stamp() > stream[i - 1].stamp())) {
            throw UnorderedInput(std::string(name) + " stream is not strictly increasing in stamp at index " +
                                 std::to_string(i));
        }
    }
}

} // namespace detail

// Zero-order hold: each modular sample pairs with the latest end-to-end
// sample not newer than it, if within align_tolerance; otherwise it is dropped.
inline AlignmentResult align_streams(std::span<const ModularSample> mod, std::span<const E2eSample> e2e,
                                     const DetectorConfig& cfg)
{
    validate_config(cfg);
    detail::require_increasing(mod, "modular");
    detail::require_increasing(e2e, "end-to-end");

    AlignmentResult out;
    out.total = mod.size();
    std::size_t next = 0; // first e2e sample newer than the current modular stamp
    for (const auto& m : mod) {
        while (next < e2e.size() && e2e[next].stamp() <= m.stamp()) {
            ++next;
        }
        if (next == 0) {
            ++out.dropped;
            continue;
        }
        const E2eSample& held = e2e[next - 1];
        if (detail::frame_skew(m, held) > cfg.align_tolerance + kStampEpsilon) {
            ++out.dropped;
            continue;
        }
        out.frames.emplace_back(m, held, cfg.align_tolerance);
    }
    return out;
}

// Online counterpart of align_streams for producers that deliver in time order.
class StreamAligner {
public:
    explicit StreamAligner(const DetectorConfig& cfg) : cfg_(validate_config(cfg)) {}

    void push_e2e(E2eSample sample)
    {
        if (latest_ && !(sample.stamp() > latest_->stamp())) {
            throw UnorderedInput("end-to-end samples must be strictly increasing in stamp");
        }
        latest_ = std::move(sample);
    }

    std::optional<AlignedFrame> push_modular(const ModularSample& sample)
    {
        if (last_mod_ && !(sample.stamp() > *last_mod_)) {
            throw UnorderedInput("modular samples must be strictly increasing in stamp");
        }
        last_mod_ = sample.stamp();
        ++total_;
        if (!latest_ || latest_->stamp() > sample.stamp() ||
            detail::frame_skew(sample, *latest_) > cfg_.align_tolerance + kStampEpsilon) {
            ++dropped_;
            return std::nullopt;
        }
        return AlignedFrame(sample, *latest_, cfg_.align_tolerance);
    }

    [[nodiscard]] std::size_t dropped() const noexcept { return dropped_; }
    [[nodiscard]] std::size_t total() const noexcept { return total_; }

private:
    DetectorConfig cfg_;
    std::optional<E2eSample> latest_;
    std::optional<double> last_mod_;
    std::size_t dropped_ = 0;
    std::size_t total_ = 0;
};

// Lateral: SpeedReduction(0.7). Longitudinal: a drop of two or more classes,
// or into Brake, is a MinimalRiskManeuver; a one-class drop is SpeedReduction(0.5).
inline ResponseAction response_policy(const CornerCaseEvent& event, const DetectorConfig& /*cfg*/)
{
    if (event.kind() == EventKind::Lateral) {
        return ResponseAction::speed_reduction(0.7);
    }
    const bool to_brake = event.to_class() && event.to_class()->value() == SpeedClass::kBrake;
    if (event.score() >= 2.0 || to_brake) {
        return ResponseAction::minimal_risk_maneuver();
    }
    if (event.score() >= 1.0) {
        return ResponseAction::speed_reduction(0.5);
    }
    return ResponseAction::none();
}

enum class SkipReason { None, PathTooShort, NonMonotonicProjection };

inline const char* to_string(SkipReason r)
{
    switch (r) {
    case SkipReason::PathTooShort: return "path_too_short";
    case SkipReason::NonMonotonicProjection: return "non_monotonic_projection";
    default: return "";
    }
}

// One row per aligned frame.
struct FrameMetrics {
    double stamp = 0.0;
    double skew = 0.0;
    std::optional<LateralScore> lateral;   // absent when the lateral step was skipped
    std::optional<double> lat_smoothed;
    LongitudinalSample longitudinal;
    SkipReason skip = SkipReason::None;
    bool lateral_event = false;            // an event fired at this frame
    bool longitudinal_event = false;
};

struct DetectionResult {
    std::vector<FrameMetrics> rows;
    std::vector<CornerCaseEvent> events; // stamp order, annotated with responses
    std::size_t lateral_skipped = 0;

    [[nodiscard]] std::vector<LateralScore> lateral_scores() const
    {
        std::vector<LateralScore> out;
        for (const auto& r : rows) {
            if (r.lateral) {
                out.push_back(*r.lateral);
            }
        }
        return out;
    }

    [[nodiscard]] std::vector<LongitudinalSample> longitudinal_samples() const
    {
        std::vector<LongitudinalSample> out;
        out.reserve(rows.size());
        for (const auto& r : rows) {
            out.push_back(r.longitudinal);
        }
        return out;
    }
};

// Online detection pipeline over aligned frames. process() returns the
// events that fire at that frame (annotated with their response); finish()
// closes open runs and returns the full record with final event windows.
class Monitor {
public:
    Monitor(ReferencePath ref, const DetectorConfig& cfg)
        : ref_(std::move(ref)), cfg_(validate_config(cfg)), lateral_(cfg_), longitudinal_(cfg_)
    {
    }

    std::vector<CornerCaseEvent> process(const AlignedFrame& frame)
    {
        FrameMetrics row;
        row.stamp = frame.stamp();
        row.skew = frame.skew();
        std::vector<CornerCaseEvent> fired;

        try {
            const auto mod = lateral_profile(ref_, frame.mod_traj(), cfg_);
            auto e2e = lateral_profile_at_stations(ref_, frame.e2e_traj(), mod.arclengths());
            const auto score = lat_score(mod, e2e, cfg_);
            row.lateral = score;
            auto step = lateral_.update(score);
            row.lat_smoothed = step.smoothed;
            if (step.opened) {
                row.lateral_event = true;
                fired.push_back(annotate(*step.opened));
            }
            if (step.closed) {
                result_.events.push_back(annotate(*step.closed));
            }
        } catch (const PathTooShort&) {
            row.skip = SkipReason::PathTooShort;
            ++result_.lateral_skipped;
        } catch (const NonMonotonicProjection&) {
            row.skip = SkipReason::NonMonotonicProjection;
            ++result_.lateral_skipped;
        }

        auto lstep = longitudinal_.step(frame.e2e_sc(), frame.plan());
        row.longitudinal = lstep.sample;
        if (lstep.opened) {
            row.longitudinal_event = true;
            fired.push_back(annotate(*lstep.opened));
        }
        if (lstep.closed) {
            result_.events.push_back(annotate(*lstep.closed));
        }

        result_.rows.push_back(std::move(row));
        return fired;
    }

    DetectionResult finish()
    {
        if (auto e = lateral_.finish()) {
            result_.events.push_back(annotate(*e));
        }
        if (auto e = longitudinal_.finish()) {
            result_.events.push_back(annotate(*e));
        }
        std::stable_sort(result_.events.begin(), result_.events.end(), [](const auto& a, const auto& b) {
            if (a.stamp() != b.stamp()) {
                return a.stamp() < b.stamp();
            }
            return a.kind() < b.kind();
        });
        DetectionResult out = std::move(result_);
        result_ = {};
        return out;
    }

    [[nodiscard]] const ReferencePath& reference() const noexcept { return ref_; }
    [[nodiscard]] const DetectorConfig& config() const noexcept { return cfg_; }

private:
    CornerCaseEvent annotate(const CornerCaseEvent& e) const { return e.with_response(response_policy(e, cfg_)); }

    ReferencePath ref_;
    DetectorConfig cfg_;
    LateralDetector lateral_;
    LongitudinalDetector longitudinal_;
    DetectionResult result_;
};

inline DetectionResult run_detection(std::span<const AlignedFrame> frames, const ReferencePath& ref,
                                     const DetectorConfig& cfg)
{
    Monitor monitor(ref, cfg);
    for (const auto& f : frames) {
        monitor.process(f);
    }
    return monitor.finish();
}

} // namespace ccd

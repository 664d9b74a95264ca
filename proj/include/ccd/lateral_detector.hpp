#pragma once

// Lateral divergence between the modular plan and the end-to-end waypoints:
// per-timestamp maximum / mean / weighted scores and a run-based detector
// over a causal moving average of the weighted score.

#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccd/core_model.hpp"

namespace ccd {

// Stations of the two profiles must agree to this many meters.
inline constexpr double kStationTolerance = 1e-6;

namespace detail {

inline void check_profiles(const LateralProfile& mod, const LateralProfile& e2e, double stamp_tolerance)
{
    if (mod.size() != e2e.size()) {
        throw ProfileMismatch("profile length mismatch: " + std::to_string(mod.size()) + " vs " +
                              std::to_string(e2e.size()));
    }
    for (std::size_t i = 0; i < mod.size(); ++i) {
        if (std::abs(mod.arclengths()[i] - e2e.arclengths()[i]) > kStationTolerance) {
            throw ProfileMismatch("station " + std::to_string(i) + " differs: " +
                                  std::to_string(mod.arclengths()[i]) + " vs " + std::to_string(e2e.arclengths()[i]));
        }
    }
    if (std::abs(mod.stamp() - e2e.stamp()) > stamp_tolerance + kStampEpsilon) {
        throw ProfileMismatch("profile stamps differ by more than the alignment tolerance");
    }
}

} // namespace detail

// max_i |lat_mod_i - lat_e2e_i|
inline double lat_max(const LateralProfile& mod, const LateralProfile& e2e,
                      double stamp_tolerance = DetectorConfig{}.align_tolerance)
{
    detail::check_profiles(mod, e2e, stamp_tolerance);
    double m = 0.0;
    for (std::size_t i = 0; i < mod.size(); ++i) {
        m = std::max(m, std::abs(mod.offsets()[i] - e2e.offsets()[i]));
    }
    return m;
}

// (1/n) sum_i |lat_mod_i - lat_e2e_i|
inline double lat_avg(const LateralProfile& mod, const LateralProfile& e2e,
                      double stamp_tolerance = DetectorConfig{}.align_tolerance)
{
    detail::check_profiles(mod, e2e, stamp_tolerance);
    double sum = 0.0;
    double m = 0.0;
    for (std::size_t i = 0; i < mod.size(); ++i) {
        const double diff = std::abs(mod.offsets()[i] - e2e.offsets()[i]);
        sum += diff;
        m = std::max(m, diff);
    }
    // The mean of values bounded by m is bounded by m; clamp away summation rounding.
    return std::min(sum / static_cast<double>(mod.size()), m);
}

// Weighted combination, stamped with the modular profile's stamp.
inline LateralScore lat_score(const LateralProfile& mod, const LateralProfile& e2e, const DetectorConfig& cfg)
{
    validate_config(cfg);
    const double m = lat_max(mod, e2e, cfg.align_tolerance);
    const double avg = lat_avg(mod, e2e, cfg.align_tolerance);
    return {mod.stamp(), m, avg, cfg.w_m, cfg.w_avg};
}

// Incremental run detector. Feed scores in strictly increasing stamp order.
// A run is a maximal stretch where the trailing average of lat over
// smoothing_window seconds stays >= lat_threshold; each run is one event.
class LateralDetector {
public:
    struct Step {
        double smoothed = 0.0;
        std::optional<CornerCaseEvent> opened; // first crossing of a run
        std::optional<CornerCaseEvent> closed; // completed run, full window
    };

    explicit LateralDetector(const DetectorConfig& cfg) : cfg_(validate_config(cfg)) {}

    Step update(const LateralScore& score)
    {
        if (last_stamp_ && !(score.stamp() > *last_stamp_)) {
            throw UnorderedInput("lateral scores must be strictly increasing in stamp");
        }
        last_stamp_ = score.stamp();

        window_.push_back({score.stamp(), score.lat()});
        // Keep samples with stamp > t - W; the epsilon keeps boundary
        // membership stable against stamp rounding.
        const double cutoff = score.stamp() - cfg_.smoothing_window + 1e-9;
        while (window_.front().stamp <= cutoff) {
            window_.pop_front();
        }
        double sum = 0.0;
        for (const auto& s : window_) {
            sum += s.lat;
        }
        Step step;
        step.smoothed = sum / static_cast<double>(window_.size());

        if (step.smoothed >= cfg_.lat_threshold) {
            if (!run_) {
                run_ = Run{score.stamp(), score.stamp(), step.smoothed};
                step.opened = make_event(*run_);
            } else {
                run_->end = score.stamp();
                run_->peak = std::max(run_->peak, step.smoothed);
            }
        } else if (run_) {
            step.closed = make_event(*run_);
            run_.reset();
        }
        return step;
    }

    // Closes a run still open at end of stream.
    std::optional<CornerCaseEvent> finish()
    {
        if (!run_) {
            return std::nullopt;
        }
        auto e = make_event(*run_);
        run_.reset();
        return e;
    }

    [[nodiscard]] bool in_run() const noexcept { return run_.has_value(); }

private:
    struct Sample {
        double stamp;
        double lat;
    };
    struct Run {
        double start;
        double end;
        double peak;
    };

    static CornerCaseEvent make_event(const Run& r)
    {
        return {EventKind::Lateral, r.start, r.peak, {r.start, r.end}, r.start};
    }

    DetectorConfig cfg_;
    std::deque<Sample> window_;
    std::optional<double> last_stamp_;
    std::optional<Run> run_;
};

inline std::vector<CornerCaseEvent> detect_lateral(std::span<const LateralScore> scores, const DetectorConfig& cfg)
{
    LateralDetector det(cfg);
    std::vector<CornerCaseEvent> events;
    for (const auto& s : scores) {
        auto step = det.update(s);
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

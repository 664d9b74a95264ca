#pragma once

// Offline analysis of run logs: stream reconstruction, replay through the
// detection pipeline, metrics/event export, threshold calibration and the
// key=value detector config file.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/fusion_response.hpp"
#include "ccd/run_log.hpp"
#include "ccd/text_format.hpp"

namespace ccd {

struct ReplayStreams {
    std::vector<ModularSample> modular;
    std::vector<E2eSample> e2e;
};

// Modular plans become modular samples; each end-to-end plan pairs with the
// speed-class record carrying the same stamp.
inline ReplayStreams reconstruct_streams(const RunLog& log)
{
    ReplayStreams out;
    std::optional<Trajectory> pending;
    for (const auto& rec : log.records) {
        if (const auto* m = std::get_if<ModularPlanRecord>(&rec)) {
            out.modular.push_back(ModularSample::from(m->trajectory));
        } else if (const auto* e = std::get_if<E2ePlanRecord>(&rec)) {
            if (pending) {
                throw ParseError(0, "e2e_plan at t=" + text::format_stamp(pending->stamp()) +
                                        " has no speed_class record");
            }
            pending = e->trajectory;
        } else if (const auto* s = std::get_if<SpeedClassRecord>(&rec)) {
            if (!pending || pending->stamp() != s->sample.stamp) {
                throw ParseError(0, "speed_class at t=" + text::format_stamp(s->sample.stamp) +
                                        " has no e2e_plan with the same stamp");
            }
            out.e2e.push_back(E2eSample::from(std::move(*pending), s->sample));
            pending.reset();
        }
    }
    if (pending) {
        throw ParseError(0, "e2e_plan at t=" + text::format_stamp(pending->stamp()) + " has no speed_class record");
    }
    return out;
}

struct ReplayResult {
    DetectionResult detection;
    std::size_t total_modular = 0;
    std::size_t dropped = 0;

    [[nodiscard]] std::size_t frames() const noexcept { return detection.rows.size(); }
    [[nodiscard]] const std::vector<CornerCaseEvent>& events() const noexcept { return detection.events; }
};

inline ReplayResult replay(const RunLog& log, const DetectorConfig& cfg)
{
    validate_config(cfg);
    const auto streams = reconstruct_streams(log);
    auto aligned = align_streams(streams.modular, streams.e2e, cfg);
    ReplayResult out;
    out.total_modular = aligned.total;
    out.dropped = aligned.dropped;
    if (aligned.frames.empty()) {
        return out;
    }
    if (log.header.reference.size() < 2) {
        throw ParseError(0, "log header carries no reference path");
    }
    out.detection = run_detection(aligned.frames, ReferencePath(log.header.reference), cfg);
    return out;
}

inline void write_metrics_csv(const ReplayResult& r, std::ostream& out)
{
    using text::format_double;
    out << "stamp,lat_m,lat_avg,lat,lat_smoothed,sc,v,delta_sc,delta_v,long_flag,skew,skip,event\n";
    for (const auto& row : r.detection.rows) {
        out << text::format_stamp(row.stamp) << ',';
        if (row.lateral) {
            out << format_double(row.lateral->lat_m()) << ',' << format_double(row.lateral->lat_avg()) << ','
                << format_double(row.lateral->lat()) << ',' << format_double(*row.lat_smoothed) << ',';
        } else {
            out << ",,,,";
        }
        const auto& l = row.longitudinal;
        std::string marker;
        if (row.lateral_event) {
            marker = "lateral";
        }
        if (row.longitudinal_event) {
            marker += marker.empty() ? "longitudinal" : "+longitudinal";
        }
        out << l.sc.value() << ',' << format_double(l.v) << ',' << l.delta_sc << ',' << format_double(l.delta_v) << ','
            << (l.long_flag ? 1 : 0) << ',' << format_double(row.skew) << ',' << to_string(row.skip) << ',' << marker
            << '\n';
    }
}

inline void write_events(const std::vector<CornerCaseEvent>& events, std::ostream& out)
{
    for (const auto& e : events) {
        out << encode_event(e) << '\n';
    }
}

inline std::string replay_summary(const RunLog& log, const ReplayResult& r)
{
    std::size_t lateral = 0;
    std::size_t longitudinal = 0;
    for (const auto& e : r.events()) {
        (e.kind() == EventKind::Lateral ? lateral : longitudinal)++;
    }
    std::ostringstream os;
    os << "scenario=" << log.header.scenario << '\n'
       << "modular_samples=" << r.total_modular << '\n'
       << "aligned_frames=" << r.frames() << '\n'
       << "dropped_frames=" << r.dropped << '\n'
       << "lateral_skipped=" << r.detection.lateral_skipped << '\n'
       << "events=" << r.events().size() << " (lateral=" << lateral << ", longitudinal=" << longitudinal << ")\n";
    for (const auto& e : r.events()) {
        os << "  " << to_string(e.kind()) << " t=" << text::format_stamp(e.stamp()) << " score="
           << text::format_double(e.score()) << " window=[" << text::format_stamp(e.window().start) << ", "
           << text::format_stamp(e.window().end) << "] response=" << e.response().to_string() << '\n';
    }
    return os.str();
}

// Floor for the suggested threshold when the nominal run shows no divergence.
inline constexpr double kMinSuggestedThreshold = 0.1;
inline constexpr double kCalibrationMargin = 1.5;

struct CalibrationReport {
    std::size_t frames = 0;
    double max_smoothed = 0.0;
    double p99_smoothed = 0.0;
    double suggested_threshold = 0.0;
    double v_jitter_max = 0.0; // max |v_t - v_{t-1}| over frames
    double v_jitter_rms = 0.0;
    std::size_t threshold_crossings = 0; // frames with smoothed lat >= current threshold
    std::size_t events = 0;

    [[nodiscard]] bool non_nominal() const noexcept { return threshold_crossings > 0 || events > 0; }
};

inline CalibrationReport calibrate(const RunLog& log, const DetectorConfig& cfg)
{
    const auto r = replay(log, cfg);
    std::vector<double> smoothed;
    CalibrationReport rep;
    rep.frames = r.frames();
    rep.events = r.events().size();
    double sq = 0.0;
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < r.detection.rows.size(); ++i) {
        const auto& row = r.detection.rows[i];
        if (row.lat_smoothed) {
            smoothed.push_back(*row.lat_smoothed);
            if (*row.lat_smoothed >= cfg.lat_threshold) {
                ++rep.threshold_crossings;
            }
        }
        if (i > 0) {
            const double dv = row.longitudinal.v - r.detection.rows[i - 1].longitudinal.v;
            rep.v_jitter_max = std::max(rep.v_jitter_max, std::abs(dv));
            sq += dv * dv;
            ++diffs;
        }
    }
    if (smoothed.empty()) {
        throw CalibrationError("calibrate: no lateral data in log");
    }
    rep.v_jitter_rms = diffs > 0 ? std::sqrt(sq / static_cast<double>(diffs)) : 0.0;
    std::sort(smoothed.begin(), smoothed.end());
    rep.max_smoothed = smoothed.back();
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(smoothed.size())));
    rep.p99_smoothed = smoothed[std::max<std::size_t>(rank, 1) - 1];
    rep.suggested_threshold = std::max(kCalibrationMargin * rep.max_smoothed, kMinSuggestedThreshold);
    return rep;
}

inline std::string format_calibration(const CalibrationReport& r)
{
    using text::format_double;
    std::ostringstream os;
    os << "frames=" << r.frames << '\n'
       << "max_smoothed_lat=" << format_double(r.max_smoothed) << '\n'
       << "p99_smoothed_lat=" << format_double(r.p99_smoothed) << '\n'
       << "suggested_lat_threshold=" << format_double(r.suggested_threshold) << '\n'
       << "v_jitter_max=" << format_double(r.v_jitter_max) << '\n'
       << "v_jitter_rms=" << format_double(r.v_jitter_rms) << '\n'
       << "threshold_crossings=" << r.threshold_crossings << '\n'
       << "events=" << r.events << '\n';
    if (r.non_nominal()) {
        os << "warning: log appears non-nominal (threshold crossings or events present); "
              "the suggestion assumes a corner-case-free run\n";
    }
    return os.str();
}

// Sets one DetectorConfig field by name. Does not validate the whole config.
inline void set_config_value(DetectorConfig& cfg, std::string_view key, std::string_view value)
{
    const std::string k(key);
    auto as_double = [&] {
        double d = 0.0;
        if (!text::parse_double(text::trim(value), d)) {
            throw ConfigError(k, "'" + std::string(value) + "' is not a number");
        }
        return d;
    };
    auto as_count = [&] {
        std::size_t n = 0;
        if (!text::parse_size(text::trim(value), n)) {
            throw ConfigError(k, "'" + std::string(value) + "' is not a non-negative integer");
        }
        return n;
    };
    if (key == "n_points") {
        cfg.n_points = as_count();
    } else if (key == "w_m") {
        cfg.w_m = as_double();
    } else if (key == "w_avg") {
        cfg.w_avg = as_double();
    } else if (key == "lat_threshold") {
        cfg.lat_threshold = as_double();
    } else if (key == "long_persistence") {
        cfg.long_persistence = as_count();
    } else if (key == "v_deadband") {
        cfg.v_deadband = as_double();
    } else if (key == "align_tolerance") {
        cfg.align_tolerance = as_double();
    } else if (key == "smoothing_window") {
        cfg.smoothing_window = as_double();
    } else if (key == "horizon") {
        cfg.horizon = as_double();
    } else {
        throw ConfigError(k, "unknown config key");
    }
}

// Flat key=value text; '#' starts a comment. Values override base.
inline DetectorConfig parse_config(std::istream& in, DetectorConfig base = {})
{
    std::string line;
    while (std::getline(in, line)) {
        std::string_view v = line;
        if (const auto hash = v.find('#'); hash != std::string_view::npos) {
            v = v.substr(0, hash);
        }
        v = text::trim(v);
        if (v.empty()) {
            continue;
        }
        const auto eq = v.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(std::string(v), "expected key=value");
        }
        set_config_value(base, text::trim(v.substr(0, eq)), v.substr(eq + 1));
    }
    return validate_config(base);
}

inline DetectorConfig read_config_file(const std::string& path, DetectorConfig base = {})
{
    std::ifstream f(path);
    if (!f) {
        throw Error("cannot open config file " + path);
    }
    return parse_config(f, base);
}

inline std::string format_config(const DetectorConfig& c)
{
    using text::format_double;
    std::ostringstream os;
    os << "n_points=" << c.n_points << '\n'
       << "w_m=" << format_double(c.w_m) << '\n'
       << "w_avg=" << format_double(c.w_avg) << '\n'
       << "lat_threshold=" << format_double(c.lat_threshold) << '\n'
       << "long_persistence=" << c.long_persistence << '\n'
       << "v_deadband=" << format_double(c.v_deadband) << '\n'
       << "align_tolerance=" << format_double(c.align_tolerance) << '\n'
       << "smoothing_window=" << format_double(c.smoothing_window) << '\n'
       << "horizon=" << format_double(c.horizon) << '\n';
    return os.str();
}

} // namespace ccd

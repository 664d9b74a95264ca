#pragma once

// Run-log record format: one JSON object per line, header first, records
// non-decreasing in stamp. Trajectories are flat coordinate lists.

#include <cstddef>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ccd/core_model.hpp"
#include "ccd/text_format.hpp"

namespace ccd {

inline constexpr int kLogFormatVersion = 1;

struct LogHeader {
    int format_version = kLogFormatVersion;
    std::string scenario;
    DetectorConfig config;
    std::vector<Pose2D> reference; // global route vertices, the shared Frenet frame
    std::string epoch = "simulation clock: seconds since scenario start";

    friend bool operator==(const LogHeader&, const LogHeader&) = default;
};

struct ModularPlanRecord {
    Trajectory trajectory;
    friend bool operator==(const ModularPlanRecord&, const ModularPlanRecord&) = default;
};

struct E2ePlanRecord {
    Trajectory trajectory;
    friend bool operator==(const E2ePlanRecord&, const E2ePlanRecord&) = default;
};

struct SpeedClassRecord {
    SpeedClassSample sample;
    friend bool operator==(const SpeedClassRecord&, const SpeedClassRecord&) = default;
};

struct WorldTruthRecord {
    double stamp = 0.0;
    Pose2D ego;
    double speed = 0.0;
    std::optional<Pose2D> pedestrian;
    friend bool operator==(const WorldTruthRecord&, const WorldTruthRecord&) = default;
};

enum class InterventionPhase { Start, End };

// Safety-driver takeover marker.
struct InterventionRecord {
    double stamp = 0.0;
    InterventionPhase phase = InterventionPhase::Start;
    friend bool operator==(const InterventionRecord&, const InterventionRecord&) = default;
};

struct EventRecord {
    CornerCaseEvent event;
    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

using LogRecord =
    std::variant<ModularPlanRecord, E2ePlanRecord, SpeedClassRecord, WorldTruthRecord, InterventionRecord, EventRecord>;

inline double record_stamp(const LogRecord& r)
{
    struct Visitor {
        double operator()(const ModularPlanRecord& x) const { return x.trajectory.stamp(); }
        double operator()(const E2ePlanRecord& x) const { return x.trajectory.stamp(); }
        double operator()(const SpeedClassRecord& x) const { return x.sample.stamp; }
        double operator()(const WorldTruthRecord& x) const { return x.stamp; }
        double operator()(const InterventionRecord& x) const { return x.stamp; }
        double operator()(const EventRecord& x) const { return x.event.stamp(); }
    };
    return std::visit(Visitor{}, r);
}

struct RunLog {
    LogHeader header;
    std::vector<LogRecord> records;

    friend bool operator==(const RunLog&, const RunLog&) = default;
};

namespace detail {

// Builds one JSON object with deterministic number formatting.
class JsonLine {
public:
    JsonLine& key(const char* k)
    {
        out_ += first_ ? "{" : ",";
        first_ = false;
        out_ += '"';
        out_ += k;
        out_ += "\":";
        return *this;
    }
    JsonLine& str(const std::string& v)
    {
        out_ += nlohmann::json(v).dump();
        return *this;
    }
    JsonLine& num(double v)
    {
        out_ += text::format_double(v);
        return *this;
    }
    JsonLine& stamp(double v)
    {
        out_ += text::format_stamp(v);
        return *this;
    }
    JsonLine& integer(long long v)
    {
        out_ += std::to_string(v);
        return *this;
    }
    JsonLine& raw(const std::string& v)
    {
        out_ += v;
        return *this;
    }
    JsonLine& numbers(const std::vector<double>& vs)
    {
        out_ += '[';
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (i > 0) {
                out_ += ',';
            }
            out_ += text::format_double(vs[i]);
        }
        out_ += ']';
        return *this;
    }
    std::string done() { return out_ + "}"; }

private:
    std::string out_;
    bool first_ = true;
};

inline std::vector<double> flatten(const Trajectory& t)
{
    std::vector<double> v;
    v.reserve(t.size() * 4);
    for (const auto& p : t.points()) {
        v.push_back(p.pose.x());
        v.push_back(p.pose.y());
        v.push_back(p.pose.heading());
        if (p.target_speed) {
            v.push_back(*p.target_speed);
        }
    }
    return v;
}

inline std::vector<double> flatten_poses(const std::vector<Pose2D>& poses)
{
    std::vector<double> v;
    v.reserve(poses.size() * 3);
    for (const auto& p : poses) {
        v.push_back(p.x());
        v.push_back(p.y());
        v.push_back(p.heading());
    }
    return v;
}

inline std::string encode_config(const DetectorConfig& c)
{
    return JsonLine{}
        .key("n_points").integer(static_cast<long long>(c.n_points))
        .key("w_m").num(c.w_m)
        .key("w_avg").num(c.w_avg)
        .key("lat_threshold").num(c.lat_threshold)
        .key("long_persistence").integer(static_cast<long long>(c.long_persistence))
        .key("v_deadband").num(c.v_deadband)
        .key("align_tolerance").num(c.align_tolerance)
        .key("smoothing_window").num(c.smoothing_window)
        .key("horizon").num(c.horizon)
        .done();
}

inline std::string response_tag(const ResponseAction& r)
{
    switch (r.level()) {
    case ResponseAction::Level::None: return "none";
    case ResponseAction::Level::SpeedReduction: return "speed_reduction";
    default: return "minimal_risk_maneuver";
    }
}

} // namespace detail

inline std::string encode_event(const CornerCaseEvent& e)
{
    detail::JsonLine j;
    j.key("type").str("event")
        .key("stamp").stamp(e.stamp())
        .key("kind").str(to_string(e.kind()))
        .key("score").num(e.score())
        .key("window").raw("[" + text::format_stamp(e.window().start) + "," + text::format_stamp(e.window().end) + "]")
        .key("trigger_stamp").stamp(e.trigger_stamp());
    if (e.to_class()) {
        j.key("to_class").integer(e.to_class()->value());
    }
    j.key("response").str(detail::response_tag(e.response()));
    if (e.response().factor()) {
        j.key("factor").num(*e.response().factor());
    }
    return j.done();
}

inline std::string encode_record(const LogRecord& rec)
{
    struct Visitor {
        std::string operator()(const ModularPlanRecord& r) const
        {
            return detail::JsonLine{}
                .key("type").str("modular_plan")
                .key("stamp").stamp(r.trajectory.stamp())
                .key("points").numbers(detail::flatten(r.trajectory))
                .done();
        }
        std::string operator()(const E2ePlanRecord& r) const
        {
            return detail::JsonLine{}
                .key("type").str("e2e_plan")
                .key("stamp").stamp(r.trajectory.stamp())
                .key("points").numbers(detail::flatten(r.trajectory))
                .done();
        }
        std::string operator()(const SpeedClassRecord& r) const
        {
            return detail::JsonLine{}
                .key("type").str("speed_class")
                .key("stamp").stamp(r.sample.stamp)
                .key("sc").integer(r.sample.sc.value())
                .done();
        }
        std::string operator()(const WorldTruthRecord& r) const
        {
            detail::JsonLine j;
            j.key("type").str("world_truth")
                .key("stamp").stamp(r.stamp)
                .key("ego").numbers({r.ego.x(), r.ego.y(), r.ego.heading()})
                .key("speed").num(r.speed);
            if (r.pedestrian) {
                j.key("pedestrian").numbers({r.pedestrian->x(), r.pedestrian->y(), r.pedestrian->heading()});
            }
            return j.done();
        }
        std::string operator()(const InterventionRecord& r) const
        {
            return detail::JsonLine{}
                .key("type").str("intervention")
                .key("stamp").stamp(r.stamp)
                .key("phase").str(r.phase == InterventionPhase::Start ? "start" : "end")
                .done();
        }
        std::string operator()(const EventRecord& r) const { return encode_event(r.event); }
    };
    return std::visit(Visitor{}, rec);
}

inline void write_log(const RunLog& log, std::ostream& out)
{
    out << detail::JsonLine{}
               .key("type").str("header")
               .key("format_version").integer(log.header.format_version)
               .key("scenario").str(log.header.scenario)
               .key("epoch").str(log.header.epoch)
               .key("config").raw(detail::encode_config(log.header.config))
               .key("reference").numbers(detail::flatten_poses(log.header.reference))
               .done()
        << '\n';
    for (const auto& r : log.records) {
        out << encode_record(r) << '\n';
    }
    if (!out) {
        throw Error("write_log: output stream failure");
    }
}

inline std::string write_log_string(const RunLog& log)
{
    std::ostringstream os;
    write_log(log, os);
    return os.str();
}

inline void write_log_file(const RunLog& log, const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw Error("write_log: cannot open " + path);
    }
    write_log(log, f);
}

namespace detail {

using nlohmann::json;

inline const json& field(const json& j, const char* name)
{
    auto it = j.find(name);
    if (it == j.end()) {
        throw std::invalid_argument(std::string("missing field '") + name + "'");
    }
    return *it;
}

inline double num_field(const json& j, const char* name)
{
    const auto& v = field(j, name);
    if (!v.is_number()) {
        throw std::invalid_argument(std::string("field '") + name + "' is not a number");
    }
    return v.get<double>();
}

inline Pose2D pose_from(const json& arr)
{
    if (!arr.is_array() || arr.size() != 3) {
        throw std::invalid_argument("pose must be [x, y, heading]");
    }
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

inline Trajectory trajectory_from(const json& j, PlanSource source)
{
    const auto& pts = field(j, "points");
    const std::size_t stride = source == PlanSource::Modular ? 4 : 3;
    if (!pts.is_array() || pts.size() % stride != 0) {
        throw std::invalid_argument("points length is not a multiple of " + std::to_string(stride));
    }
    std::vector<TrajectoryPoint> points;
    points.reserve(pts.size() / stride);
    for (std::size_t i = 0; i < pts.size(); i += stride) {
        TrajectoryPoint p{{pts[i].get<double>(), pts[i + 1].get<double>(), pts[i + 2].get<double>()}, std::nullopt};
        if (stride == 4) {
            p.target_speed = pts[i + 3].get<double>();
        }
        points.push_back(p);
    }
    return {num_field(j, "stamp"), std::move(points), source};
}

inline DetectorConfig config_from(const json& j)
{
    DetectorConfig c;
    c.n_points = field(j, "n_points").get<std::size_t>();
    c.w_m = num_field(j, "w_m");
    c.w_avg = num_field(j, "w_avg");
    c.lat_threshold = num_field(j, "lat_threshold");
    c.long_persistence = field(j, "long_persistence").get<std::size_t>();
    c.v_deadband = num_field(j, "v_deadband");
    c.align_tolerance = num_field(j, "align_tolerance");
    c.smoothing_window = num_field(j, "smoothing_window");
    c.horizon = num_field(j, "horizon");
    return c;
}

} // namespace detail

inline CornerCaseEvent decode_event(const nlohmann::json& j)
{
    using namespace detail;
    const auto kind_tag = field(j, "kind").get<std::string>();
    EventKind kind;
    if (kind_tag == "lateral") {
        kind = EventKind::Lateral;
    } else if (kind_tag == "longitudinal") {
        kind = EventKind::Longitudinal;
    } else {
        throw std::invalid_argument("unknown event kind '" + kind_tag + "'");
    }
    const auto& w = field(j, "window");
    if (!w.is_array() || w.size() != 2) {
        throw std::invalid_argument("window must be [start, end]");
    }
    std::optional<SpeedClass> to_class;
    if (j.contains("to_class")) {
        to_class = SpeedClass(j["to_class"].get<int>());
    }
    const auto tag = field(j, "response").get<std::string>();
    ResponseAction response;
    if (tag == "speed_reduction") {
        response = ResponseAction::speed_reduction(num_field(j, "factor"));
    } else if (tag == "minimal_risk_maneuver") {
        response = ResponseAction::minimal_risk_maneuver();
    } else if (tag != "none") {
        throw std::invalid_argument("unknown response '" + tag + "'");
    }
    return {kind,
            num_field(j, "stamp"),
            num_field(j, "score"),
            {w[0].get<double>(), w[1].get<double>()},
            num_field(j, "trigger_stamp"),
            to_class,
            response};
}

inline LogRecord decode_record(const nlohmann::json& j)
{
    using namespace detail;
    const auto type = field(j, "type").get<std::string>();
    if (type == "modular_plan") {
        return ModularPlanRecord{trajectory_from(j, PlanSource::Modular)};
    }
    if (type == "e2e_plan") {
        return E2ePlanRecord{trajectory_from(j, PlanSource::EndToEnd)};
    }
    if (type == "speed_class") {
        return SpeedClassRecord{{num_field(j, "stamp"), SpeedClass(field(j, "sc").get<int>())}};
    }
    if (type == "world_truth") {
        WorldTruthRecord r{num_field(j, "stamp"), pose_from(field(j, "ego")), num_field(j, "speed"), std::nullopt};
        if (j.contains("pedestrian")) {
            r.pedestrian = pose_from(j["pedestrian"]);
        }
        return r;
    }
    if (type == "intervention") {
        const auto phase = field(j, "phase").get<std::string>();
        if (phase != "start" && phase != "end") {
            throw std::invalid_argument("unknown intervention phase '" + phase + "'");
        }
        return InterventionRecord{num_field(j, "stamp"), phase == "start" ? InterventionPhase::Start
                                                                          : InterventionPhase::End};
    }
    if (type == "event") {
        return EventRecord{decode_event(j)};
    }
    throw std::invalid_argument("unknown record type '" + type + "'");
}

inline RunLog read_log(std::istream& in)
{
    RunLog log;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    double last_stamp = -std::numeric_limits<double>::infinity();
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object()) {
                throw std::invalid_argument("record is not a JSON object");
            }
            if (!have_header) {
                if (detail::field(j, "type").get<std::string>() != "header") {
                    throw std::invalid_argument("first record must be the header");
                }
                const int version = detail::field(j, "format_version").get<int>();
                if (version != kLogFormatVersion) {
                    throw std::invalid_argument("unsupported format_version " + std::to_string(version));
                }
                log.header.format_version = version;
                log.header.scenario = detail::field(j, "scenario").get<std::string>();
                log.header.epoch = detail::field(j, "epoch").get<std::string>();
                log.header.config = detail::config_from(detail::field(j, "config"));
                const auto& ref = detail::field(j, "reference");
                if (!ref.is_array() || ref.size() % 3 != 0) {
                    throw std::invalid_argument("reference must be a flat [x, y, heading, ...] list");
                }
                for (std::size_t i = 0; i < ref.size(); i += 3) {
                    log.header.reference.emplace_back(ref[i].get<double>(), ref[i + 1].get<double>(),
                                                      ref[i + 2].get<double>());
                }
                have_header = true;
                continue;
            }
            auto rec = decode_record(j);
            const double stamp = record_stamp(rec);
            if (stamp < last_stamp) {
                throw std::invalid_argument("record stamp decreases");
            }
            last_stamp = stamp;
            log.records.push_back(std::move(rec));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }
    if (!have_header) {
        throw ParseError(lineno, "missing header");
    }
    return log;
}

inline RunLog read_log_string(const std::string& s)
{
    std::istringstream is(s);
    return read_log(is);
}

inline RunLog read_log_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw Error("read_log: cannot open " + path);
    }
    return read_log(f);
}

} // namespace ccd

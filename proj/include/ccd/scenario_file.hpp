#pragma once

// Declarative scenario text format. One directive per line, '#' starts a
// comment. SI units throughout (m, s, m/s, rad).
//
//   name <identifier>
//   duration <s>            dt <s>
//   modular_rate <Hz>       e2e_rate <Hz>
//   seed <uint>             cruise_speed <m/s>
//   jitter <lateral m> <speed m/s>
//   ref_start <x> <y> <heading>     starts the reference polyline
//   ref_vertex <x> <y>              appends a vertex
//   ref_line <length>               extends straight ahead
//   ref_arc <radius> <angle> <step> extends along an arc, angle > 0 turns left
//   ego <x> <y> <heading> <speed>   default: reference start at cruise speed
//   obstacle <x> <y> <heading> <length> <width>
//   pedestrian <x> <y> <vx> <vy> <spawn_time> [visibility_range]
//   intervention <start> <end> <decel>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/sim_harness.hpp"
#include "ccd/text_format.hpp"

namespace ccd::sim {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view s)
{
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) {
            ++i;
        }
        const std::size_t j = s.find_first_of(" \t", i);
        const std::size_t end = j == std::string_view::npos ? s.size() : j;
        if (end > i) {
            out.push_back(s.substr(i, end - i));
        }
        i = end;
    }
    return out;
}

// Turtle-style polyline builder for the ref_* directives.
class PolylineBuilder {
public:
    void start(double x, double y, double heading)
    {
        if (!pts_.empty()) {
            throw std::invalid_argument("ref_start must come before other ref_* directives");
        }
        pts_.push_back({x, y});
        heading_ = heading;
    }
    void vertex(double x, double y)
    {
        if (!pts_.empty()) {
            const Vec2 d = Vec2{x, y} - pts_.back();
            heading_ = std::atan2(d.y, d.x);
        }
        pts_.push_back({x, y});
    }
    void line(double length)
    {
        require_start();
        if (!(length > 0.0)) {
            throw std::invalid_argument("ref_line length must be > 0");
        }
        pts_.push_back(pts_.back() + length * Vec2{std::cos(heading_), std::sin(heading_)});
    }
    void arc(double radius, double angle, double step)
    {
        require_start();
        if (!(radius > 0.0) || !(step > 0.0) || angle == 0.0) {
            throw std::invalid_argument("ref_arc needs radius > 0, step > 0, angle != 0");
        }
        const double side = angle > 0.0 ? 1.0 : -1.0;
        const Vec2 p0 = pts_.back();
        const Vec2 center = p0 + (side * radius) * Vec2{-std::sin(heading_), std::cos(heading_)};
        const double phi0 = std::atan2(p0.y - center.y, p0.x - center.x);
        const auto pieces = static_cast<std::size_t>(std::ceil(std::abs(angle) * radius / step));
        for (std::size_t k = 1; k <= pieces; ++k) {
            const double phi = phi0 + angle * static_cast<double>(k) / static_cast<double>(pieces);
            pts_.push_back(center + radius * Vec2{std::cos(phi), std::sin(phi)});
        }
        heading_ += angle;
    }
    [[nodiscard]] bool empty() const { return pts_.empty(); }
    [[nodiscard]] const std::vector<Vec2>& points() const { return pts_; }

private:
    void require_start() const
    {
        if (pts_.empty()) {
            throw std::invalid_argument("ref_start or ref_vertex must come first");
        }
    }

    std::vector<Vec2> pts_;
    double heading_ = 0.0;
};

} // namespace detail

inline Scenario parse_scenario(std::istream& in)
{
    std::optional<std::string> name;
    detail::PolylineBuilder ref;
    std::optional<VehicleState> ego;
    Scenario proto;
    std::string line;
    std::size_t lineno = 0;

    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) {
            view = view.substr(0, hash);
        }
        const auto tok = detail::split_ws(text::trim(view));
        if (tok.empty()) {
            continue;
        }
        try {
            const std::string_view key = tok[0];
            auto nums = [&](std::size_t min_count, std::size_t max_count) {
                const std::size_t n = tok.size() - 1;
                if (n < min_count || n > max_count) {
                    throw std::invalid_argument("'" + std::string(key) + "' expects " + std::to_string(min_count) +
                                                (max_count != min_count ? "-" + std::to_string(max_count) : "") +
                                                " values, got " + std::to_string(n));
                }
                std::vector<double> v;
                for (std::size_t i = 1; i < tok.size(); ++i) {
                    double d = 0.0;
                    if (!text::parse_double(tok[i], d)) {
                        throw std::invalid_argument("'" + std::string(tok[i]) + "' is not a number");
                    }
                    v.push_back(d);
                }
                return v;
            };

            if (key == "name") {
                if (tok.size() != 2) {
                    throw std::invalid_argument("'name' expects one identifier");
                }
                name = std::string(tok[1]);
            } else if (key == "duration") {
                proto.duration = nums(1, 1)[0];
            } else if (key == "dt") {
                proto.dt = nums(1, 1)[0];
            } else if (key == "modular_rate") {
                proto.modular_rate = nums(1, 1)[0];
            } else if (key == "e2e_rate") {
                proto.e2e_rate = nums(1, 1)[0];
            } else if (key == "cruise_speed") {
                proto.cruise_speed = nums(1, 1)[0];
            } else if (key == "seed") {
                if (tok.size() != 2) {
                    throw std::invalid_argument("'seed' expects one value");
                }
                std::size_t seed = 0;
                if (!text::parse_size(tok[1], seed)) {
                    throw std::invalid_argument("seed must be a non-negative integer");
                }
                proto.seed = seed;
            } else if (key == "jitter") {
                const auto v = nums(2, 2);
                proto.jitter_lateral = v[0];
                proto.jitter_speed = v[1];
            } else if (key == "ref_start") {
                const auto v = nums(3, 3);
                ref.start(v[0], v[1], v[2]);
            } else if (key == "ref_vertex") {
                const auto v = nums(2, 2);
                ref.vertex(v[0], v[1]);
            } else if (key == "ref_line") {
                ref.line(nums(1, 1)[0]);
            } else if (key == "ref_arc") {
                const auto v = nums(3, 3);
                ref.arc(v[0], v[1], v[2]);
            } else if (key == "ego") {
                const auto v = nums(4, 4);
                ego = VehicleState{{v[0], v[1], wrap_angle(v[2])}, v[3]};
            } else if (key == "obstacle") {
                const auto v = nums(5, 5);
                proto.obstacles.push_back({{v[0], v[1], wrap_angle(v[2])}, v[3], v[4]});
            } else if (key == "pedestrian") {
                const auto v = nums(5, 6);
                PedestrianScript p{{v[0], v[1]}, {v[2], v[3]}, v[4]};
                if (v.size() == 6) {
                    p.visibility_range = v[5];
                }
                proto.pedestrian = p;
            } else if (key == "intervention") {
                const auto v = nums(3, 3);
                proto.intervention = InterventionScript{v[0], v[1], v[2]};
            } else {
                throw std::invalid_argument("unknown directive '" + std::string(key) + "'");
            }
        } catch (const std::exception& e) {
            throw ParseError(lineno, e.what());
        }
    }

    try {
        if (!name) {
            throw std::invalid_argument("missing 'name'");
        }
        if (ref.points().size() < 2) {
            throw std::invalid_argument("reference needs at least 2 vertices");
        }
        Scenario sc = proto;
        sc.name = *name;
        sc.reference = ReferencePath::from_points(ref.points());
        sc.initial = ego ? *ego : VehicleState{sc.reference.vertices().front(), sc.cruise_speed};
        validate_scenario(sc);
        return sc;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(0, e.what());
    }
}

inline Scenario parse_scenario_string(const std::string& s)
{
    std::istringstream is(s);
    return parse_scenario(is);
}

inline Scenario read_scenario_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f) {
        throw Error("cannot open scenario file " + path);
    }
    return parse_scenario(f);
}

// Canonical text form; parse_scenario(format_scenario(s)) == s.
inline std::string format_scenario(const Scenario& sc)
{
    using text::format_double;
    std::ostringstream os;
    os << "name " << sc.name << '\n'
       << "duration " << format_double(sc.duration) << '\n'
       << "dt " << format_double(sc.dt) << '\n'
       << "modular_rate " << format_double(sc.modular_rate) << '\n'
       << "e2e_rate " << format_double(sc.e2e_rate) << '\n'
       << "seed " << sc.seed << '\n'
       << "cruise_speed " << format_double(sc.cruise_speed) << '\n'
       << "jitter " << format_double(sc.jitter_lateral) << ' ' << format_double(sc.jitter_speed) << '\n';
    for (const auto& v : sc.reference.vertices()) {
        os << "ref_vertex " << format_double(v.x()) << ' ' << format_double(v.y()) << '\n';
    }
    os << "ego " << format_double(sc.initial.pose.x()) << ' ' << format_double(sc.initial.pose.y()) << ' '
       << format_double(sc.initial.pose.heading()) << ' ' << format_double(sc.initial.speed) << '\n';
    for (const auto& o : sc.obstacles) {
        os << "obstacle " << format_double(o.center.x()) << ' ' << format_double(o.center.y()) << ' '
           << format_double(o.center.heading()) << ' ' << format_double(o.length) << ' ' << format_double(o.width)
           << '\n';
    }
    if (sc.pedestrian) {
        const auto& p = *sc.pedestrian;
        os << "pedestrian " << format_double(p.start.x) << ' ' << format_double(p.start.y) << ' '
           << format_double(p.velocity.x) << ' ' << format_double(p.velocity.y) << ' '
           << format_double(p.spawn_time) << ' ' << format_double(p.visibility_range) << '\n';
    }
    if (sc.intervention) {
        os << "intervention " << format_double(sc.intervention->start) << ' ' << format_double(sc.intervention->end)
           << ' ' << format_double(sc.intervention->decel) << '\n';
    }
    return os.str();
}

} // namespace ccd::sim

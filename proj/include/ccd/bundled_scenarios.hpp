#pragma once

// The four scenarios shipped with the simulator.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ccd/scenario_file.hpp"

namespace ccd::sim {

struct BundledScenario {
    std::string_view name;
    std::string_view summary;
    std::string_view text;
};

inline const std::vector<BundledScenario>& bundled_scenarios()
{
    static const std::vector<BundledScenario> all = {
        {"nominal_straight", "empty straight road; both systems agree",
         R"(name nominal_straight
duration 20
cruise_speed 8
ref_start 0 0 0
ref_line 300
)"},
        {"nominal_curve", "empty road with a 90 degree left bend of radius 60 m",
         R"(name nominal_curve
duration 20
cruise_speed 8
ref_start 0 0 0
ref_line 30
ref_arc 60 1.5707963267948966 1
ref_line 150
)"},
        {"overtake_parked_vehicle",
         "parked vehicle intruding on the lane; the modular plan swerves, the end-to-end plan stays centered",
         R"(name overtake_parked_vehicle
duration 20
cruise_speed 8
ref_start 0 0 0
ref_line 300
obstacle 80 -1.0 0 4.5 1.8
)"},
        {"pedestrian_crossing",
         "pedestrian crosses from the right; the modular stub cannot see it, the safety driver intervenes",
         R"(name pedestrian_crossing
duration 20
cruise_speed 8
ref_start 0 0 0
ref_line 300
# x y vx vy spawn_time visibility_range
pedestrian 80 -7 0 1.4 5 3
# start end decel
intervention 8 12 3
)"},
    };
    return all;
}

inline Scenario bundled_scenario(std::string_view name)
{
    for (const auto& b : bundled_scenarios()) {
        if (b.name == name) {
            return parse_scenario_string(std::string(b.text));
        }
    }
    throw Error("unknown bundled scenario '" + std::string(name) + "'");
}

inline bool is_bundled_scenario(std::string_view name)
{
    for (const auto& b : bundled_scenarios()) {
        if (b.name == name) {
            return true;
        }
    }
    return false;
}

} // namespace ccd::sim

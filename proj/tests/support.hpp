#pragma once

// Scenario builders and helpers shared by the unit tests and the acceptance run.

#include "wiploc/io/output.hpp"
#include "wiploc/io/scenario_yaml.hpp"
#include "wiploc/wiploc.hpp"

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace support {

using namespace wiploc;

inline std::filesystem::path experiments_dir()
{
    return WIPLOC_EXPERIMENTS_DIR;
}

inline sim::Scenario bundled(const std::string& name)
{
    return io::load_scenario(experiments_dir() / (name + ".yaml"));
}

inline std::vector<std::filesystem::path> bundled_files()
{
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(experiments_dir()))
        if (e.path().extension() == ".yaml")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

inline std::string trace_bytes(const sim::RunResult& r)
{
    std::ostringstream os;
    io::write_trace_csv(os, r.traces);
    return os.str();
}

/// One 4 x 4 m room, one anchor, the mobile at the centre.
inline sim::Scenario one_room()
{
    sim::Scenario s;
    s.name = "one-room";
    s.rooms = {{1, "room", {{0, 0}, {4, 4}}}};
    NodeSpec a;
    a.id = 0;
    a.position = {1, 1};
    NodeSpec m;
    m.id = 100;
    m.role = Role::Mobile;
    s.nodes = {a, m};
    s.positions = {{2, 2}, {3, 3}};
    s.rounds = 10;
    return s;
}

/// WiPLoc++ with one charging anchor at the origin aimed along +x and WPAs
/// on the boresight with the given ADC phases (ids 1, 2, ...).
inline sim::Scenario wpa_line(const std::vector<double>& phases_ms, int rounds = 3)
{
    sim::Scenario s;
    s.name = "wpa-line";
    s.mode = Mode::WiPLocPlus;
    s.truth = sim::TruthMode::Cell;
    s.rooms = {{1, "hall", {{-1, -2}, {5, 2}}}};
    NodeSpec a;
    a.id = 0;
    a.position = {0, 0};
    a.charger_headings_deg = {0.0};
    s.nodes.push_back(a);
    for (std::size_t i = 0; i < phases_ms.size(); ++i) {
        NodeSpec w;
        w.id = static_cast<int>(i) + 1;
        w.role = Role::Wpa;
        const double x = 1.0 + 0.2 * static_cast<double>(i);
        w.position = {x, 0.0};
        w.cell = Rect{{x - 0.1, -2}, {x + 0.1, 2}};
        w.adc_phase_ms = phases_ms[i];
        s.nodes.push_back(w);
    }
    NodeSpec m;
    m.id = 100;
    m.role = Role::Mobile;
    s.nodes.push_back(m);
    s.positions = {{2.05, 1.0}};
    s.rounds = rounds;
    return s;
}

} // namespace support

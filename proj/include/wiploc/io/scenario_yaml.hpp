#pragma once

// Scenario files. Every mapping accepts a fixed key set; anything else is an
// error reported as file:line:col.

#include "wiploc/sim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace wiploc::io {

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

struct Reader {
    std::string file;

    [[noreturn]] void fail(const YAML::Node& n, const std::string& msg) const
    {
        const auto m = n.Mark();
        std::ostringstream os;
        os << file;
        if (!m.is_null())
            os << ':' << m.line + 1 << ':' << m.column + 1;
        os << ": " << msg;
        throw ParseError(os.str());
    }

    void require_map(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsMap())
            fail(n, std::string(what) + " must be a mapping");
    }

    void require_seq(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsSequence())
            fail(n, std::string(what) + " must be a list");
    }

    void keys(const YAML::Node& n, std::string_view section, std::initializer_list<std::string_view> allowed) const
    {
        require_map(n, section);
        for (const auto& kv : n) {
            const auto k = kv.first.as<std::string>();
            bool ok = false;
            for (auto a : allowed)
                ok = ok || k == a;
            if (!ok)
                fail(kv.first, "unknown key '" + k + "' in " + std::string(section));
        }
    }

    template <class T>
    T scalar(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsScalar())
            fail(n, std::string(what) + " must be a scalar");
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, "bad value '" + n.Scalar() + "' for " + std::string(what));
        }
    }

    template <class T>
    void opt(const YAML::Node& parent, const char* key, T& out, std::string_view section) const
    {
        if (const auto n = parent[key])
            out = scalar<T>(n, std::string(section) + "." + key);
    }

    YAML::Node need(const YAML::Node& parent, const char* key, std::string_view section) const
    {
        const auto n = parent[key];
        if (!n)
            fail(parent, "missing key '" + std::string(key) + "' in " + std::string(section));
        return n;
    }

    Vec2 point(const YAML::Node& n, std::string_view what) const
    {
        if (!n.IsSequence() || n.size() != 2)
            fail(n, std::string(what) + " must be [x, y]");
        return {scalar<double>(n[0], what), scalar<double>(n[1], what)};
    }

    Rect rect(const YAML::Node& n, std::string_view what) const
    {
        keys(n, what, {"min", "max"});
        return {point(need(n, "min", what), what), point(need(n, "max", what), what)};
    }
};

inline void read_profile(const Reader& r, const YAML::Node& n, PowerProfile& p, std::string_view what)
{
    r.keys(n, what, {"p_tx", "p_rx", "p_adc", "p_wfi", "t_tx", "t_adc", "t_rx_expected"});
    r.opt(n, "p_tx", p.p_tx, what);
    r.opt(n, "p_rx", p.p_rx, what);
    r.opt(n, "p_adc", p.p_adc, what);
    r.opt(n, "p_wfi", p.p_wfi, what);
    r.opt(n, "t_tx", p.t_tx, what);
    r.opt(n, "t_adc", p.t_adc, what);
    r.opt(n, "t_rx_expected", p.t_rx_expected, what);
}

inline Mode parse_mode(const Reader& r, const YAML::Node& n)
{
    const auto s = r.scalar<std::string>(n, "mode");
    if (s == "wiploc")
        return Mode::WiPLoc;
    if (s == "wiploc++")
        return Mode::WiPLocPlus;
    r.fail(n, "mode must be 'wiploc' or 'wiploc++', got '" + s + "'");
}

inline sim::TruthMode parse_truth(const Reader& r, const YAML::Node& n)
{
    const auto s = r.scalar<std::string>(n, "experiment.truth");
    if (s == "any")
        return sim::TruthMode::Any;
    if (s == "room")
        return sim::TruthMode::Room;
    if (s == "voronoi")
        return sim::TruthMode::Voronoi;
    if (s == "cell")
        return sim::TruthMode::Cell;
    r.fail(n, "experiment.truth must be one of any|room|voronoi|cell, got '" + s + "'");
}

} // namespace detail

inline std::optional<Mode> mode_from_string(std::string_view s)
{
    if (s == "wiploc")
        return Mode::WiPLoc;
    if (s == "wiploc++")
        return Mode::WiPLocPlus;
    return std::nullopt;
}

/// Parse scenario text. Does not validate cross-field constraints.
inline sim::Scenario parse_scenario(const std::string& text, const std::string& file = "<scenario>")
{
    detail::Reader r{file};
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(file + ":" + std::to_string(e.mark.line + 1) + ":" + std::to_string(e.mark.column + 1)
                         + ": " + e.msg);
    }
    if (!root || root.IsNull())
        throw ParseError(file + ": empty scenario");
    r.keys(root, "scenario", {"name", "mode", "seed", "geometry", "channel", "wpt", "power", "nodes", "duty",
                              "experiment"});

    sim::Scenario s;
    r.opt(root, "name", s.name, "scenario");
    if (const auto m = root["mode"])
        s.mode = detail::parse_mode(r, m);
    r.opt(root, "seed", s.seed, "scenario");

    // geometry
    {
        const auto g = r.need(root, "geometry", "scenario");
        r.keys(g, "geometry", {"rooms", "walls"});
        const auto rooms = r.need(g, "rooms", "geometry");
        r.require_seq(rooms, "geometry.rooms");
        int next_id = 0;
        for (const auto& rn : rooms) {
            r.keys(rn, "geometry.rooms[]", {"id", "name", "min", "max"});
            sim::Room room;
            room.id = next_id;
            r.opt(rn, "id", room.id, "geometry.rooms[]");
            room.name = "room" + std::to_string(room.id);
            r.opt(rn, "name", room.name, "geometry.rooms[]");
            room.area = {r.point(r.need(rn, "min", "geometry.rooms[]"), "geometry.rooms[].min"),
                         r.point(r.need(rn, "max", "geometry.rooms[]"), "geometry.rooms[].max")};
            next_id = room.id + 1;
            s.rooms.push_back(std::move(room));
        }
        if (const auto walls = g["walls"]) {
            r.require_seq(walls, "geometry.walls");
            for (const auto& w : walls) {
                if (!w.IsSequence() || w.size() != 2)
                    r.fail(w, "geometry.walls[] must be [[x0, y0], [x1, y1]]");
                s.walls.push_back({r.point(w[0], "geometry.walls[]"), r.point(w[1], "geometry.walls[]")});
            }
        }
    }

    if (const auto c = root["channel"]) {
        r.keys(c, "channel", {"ref_loss_db", "exponent", "wall_loss_db", "capture_threshold_db", "sensitivity_dbm"});
        r.opt(c, "ref_loss_db", s.channel.ref_loss_db, "channel");
        r.opt(c, "exponent", s.channel.exponent, "channel");
        r.opt(c, "wall_loss_db", s.channel.wall_loss_db, "channel");
        r.opt(c, "capture_threshold_db", s.channel.capture_threshold_db, "channel");
        r.opt(c, "sensitivity_dbm", s.channel.sensitivity_dbm, "channel");
    }

    if (const auto w = root["wpt"]) {
        r.keys(w, "wpt", {"points", "beam_halfangle_deg", "floor_mw", "wall_loss_db"});
        if (const auto pts = w["points"]) {
            r.require_seq(pts, "wpt.points");
            s.wpt.points.clear();
            for (const auto& p : pts) {
                const auto v = r.point(p, "wpt.points[] as [distance_m, power_mw]");
                s.wpt.points.push_back({v.x, v.y});
            }
        }
        r.opt(w, "beam_halfangle_deg", s.wpt.beam_halfangle_deg, "wpt");
        r.opt(w, "floor_mw", s.wpt.floor_mw, "wpt");
        r.opt(w, "wall_loss_db", s.wpt.wall_loss_db, "wpt");
    }

    if (const auto p = root["power"]) {
        r.keys(p, "power", {"mobile", "wpa"});
        if (const auto m = p["mobile"])
            detail::read_profile(r, m, s.mobile_profile, "power.mobile");
        if (const auto m = p["wpa"])
            detail::read_profile(r, m, s.wpa_profile, "power.wpa");
    }

    if (const auto d = root["duty"]) {
        r.keys(d, "duty", {"t_m_ms", "t_c_ms"});
        r.opt(d, "t_m_ms", s.duty.t_m_ms, "duty");
        r.opt(d, "t_c_ms", s.duty.t_c_ms, "duty");
    }

    {
        const auto nodes = r.need(root, "nodes", "scenario");
        r.require_seq(nodes, "nodes");
        for (const auto& nn : nodes) {
            r.keys(nn, "nodes[]",
                   {"id", "role", "position", "tx_power_dbm", "group_id", "chargers", "cell", "adc_phase_ms"});
            NodeSpec spec;
            spec.id = r.scalar<int>(r.need(nn, "id", "nodes[]"), "nodes[].id");
            const auto role_node = r.need(nn, "role", "nodes[]");
            const auto role = r.scalar<std::string>(role_node, "nodes[].role");
            if (role == "anchor")
                spec.role = Role::Anchor;
            else if (role == "wpa")
                spec.role = Role::Wpa;
            else if (role == "mobile")
                spec.role = Role::Mobile;
            else
                r.fail(role_node, "nodes[].role must be anchor|wpa|mobile, got '" + role + "'");
            if (const auto pos = nn["position"])
                spec.position = r.point(pos, "nodes[].position");
            else if (spec.role != Role::Mobile)
                r.fail(nn, "missing key 'position' in nodes[]");
            r.opt(nn, "tx_power_dbm", spec.tx_power_dbm, "nodes[]");
            r.opt(nn, "group_id", spec.group_id, "nodes[]");
            if (const auto ch = nn["chargers"]) {
                if (spec.role != Role::Anchor)
                    r.fail(ch, "nodes[].chargers is only valid for anchors");
                r.require_seq(ch, "nodes[].chargers");
                for (const auto& h : ch)
                    spec.charger_headings_deg.push_back(r.scalar<double>(h, "nodes[].chargers[]"));
            }
            if (const auto cell = nn["cell"]) {
                if (spec.role != Role::Wpa)
                    r.fail(cell, "nodes[].cell is only valid for wpa nodes");
                spec.cell = r.rect(cell, "nodes[].cell");
            }
            if (const auto ph = nn["adc_phase_ms"]) {
                if (spec.role != Role::Wpa)
                    r.fail(ph, "nodes[].adc_phase_ms is only valid for wpa nodes");
                spec.adc_phase_ms = r.scalar<double>(ph, "nodes[].adc_phase_ms");
            }
            s.nodes.push_back(std::move(spec));
        }
    }

    {
        const auto e = r.need(root, "experiment", "scenario");
        r.keys(e, "experiment", {"rounds", "truth", "theta_dbm", "codec", "code_order", "rx_window_ms",
                                 "round_offset_ms", "edge_db", "positions"});
        r.opt(e, "rounds", s.rounds, "experiment");
        if (const auto t = e["truth"])
            s.truth = detail::parse_truth(r, t);
        if (const auto th = e["theta_dbm"]) {
            if (th.IsScalar() && th.Scalar() == "mean")
                s.theta_dbm.reset();
            else
                s.theta_dbm = r.scalar<double>(th, "experiment.theta_dbm (number or 'mean')");
        }
        r.opt(e, "codec", s.codec, "experiment");
        r.opt(e, "code_order", s.code_order, "experiment");
        r.opt(e, "rx_window_ms", s.rx_window_ms, "experiment");
        r.opt(e, "round_offset_ms", s.round_offset_ms, "experiment");
        r.opt(e, "edge_db", s.edge_db, "experiment");
        const auto pos = r.need(e, "positions", "experiment");
        r.require_seq(pos, "experiment.positions");
        for (const auto& p : pos)
            s.positions.push_back(r.point(p, "experiment.positions[]"));
    }
    return s;
}

/// Resolve `path`, trying a ".yaml" suffix when the bare name does not exist.
inline std::filesystem::path resolve_scenario_path(const std::filesystem::path& path)
{
    if (std::filesystem::is_regular_file(path))
        return path;
    auto with_ext = path;
    with_ext += ".yaml";
    if (std::filesystem::is_regular_file(with_ext))
        return with_ext;
    throw ParseError(path.string() + ": no such scenario file");
}

/// Load, parse and validate a scenario file.
inline sim::Scenario load_scenario(const std::filesystem::path& path)
{
    const auto resolved = resolve_scenario_path(path);
    std::ifstream in(resolved);
    if (!in)
        throw ParseError(resolved.string() + ": cannot open");
    std::stringstream buf;
    buf << in.rdbuf();
    auto s = parse_scenario(buf.str(), resolved.string());
    try {
        s.validate();
    } catch (const ValidationError& e) {
        throw ParseError(resolved.string() + ": " + e.what());
    }
    return s;
}

} // namespace wiploc::io

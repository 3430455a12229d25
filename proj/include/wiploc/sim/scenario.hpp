#pragma once

#include "wiploc/codec.hpp"
#include "wiploc/energy.hpp"
#include "wiploc/error.hpp"
#include "wiploc/geometry.hpp"
#include "wiploc/phy.hpp"
#include "wiploc/protocol.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wiploc::sim {

struct Room {
    int id = 0;
    std::string name;
    Rect area;
};

/// What counts as a correct estimate.
enum class TruthMode {
    Any,     ///< any decoded deployed anchor
    Room,    ///< estimated room == room containing the mobile
    Voronoi, ///< estimated anchor == nearest anchor
    Cell,    ///< estimated WPA cell == cell containing the mobile
};

inline std::string_view to_string(TruthMode t)
{
    switch (t) {
    case TruthMode::Any:
        return "any";
    case TruthMode::Room:
        return "room";
    case TruthMode::Voronoi:
        return "voronoi";
    case TruthMode::Cell:
        return "cell";
    }
    return "?";
}

struct Scenario {
    std::string name = "scenario";
    Mode mode = Mode::WiPLoc;
    std::uint64_t seed = 1;

    std::vector<Room> rooms;
    std::vector<Segment> walls;
    std::vector<NodeSpec> nodes;

    ChannelModel channel;
    WptModel wpt;
    DutyConfig duty;
    PowerProfile mobile_profile = PowerProfile::mobile();
    PowerProfile wpa_profile = PowerProfile::wpa();

    std::vector<Vec2> positions;
    int rounds = 50;
    TruthMode truth = TruthMode::Room;
    std::optional<double> theta_dbm; ///< unset: mean of the WPA readings per anchor
    bool codec = true;
    int code_order = 4;
    double rx_window_ms = 2.5;
    double round_offset_ms = 1.0;
    double edge_db = 1.0;
    int group_id = 1;

    std::vector<const NodeSpec*> with_role(Role r) const
    {
        std::vector<const NodeSpec*> out;
        for (const auto& n : nodes)
            if (n.role == r)
                out.push_back(&n);
        return out;
    }

    const NodeSpec* find(int id) const
    {
        for (const auto& n : nodes)
            if (n.id == id)
                return &n;
        return nullptr;
    }

    std::optional<int> room_at(Vec2 p) const
    {
        for (const auto& r : rooms)
            if (r.area.contains(p))
                return r.id;
        return std::nullopt;
    }

    std::vector<std::string> violations() const
    {
        std::vector<std::string> v;
        auto add = [&](std::vector<std::string> more) {
            v.insert(v.end(), more.begin(), more.end());
        };
        add(channel.violations());
        add(wpt.violations());
        add(duty.violations());
        for (auto s : mobile_profile.violations())
            v.push_back("power.mobile: " + s);
        for (auto s : wpa_profile.violations())
            v.push_back("power.wpa: " + s);

        if (rooms.empty())
            v.emplace_back("geometry.rooms must not be empty");
        std::set<int> room_ids;
        for (const auto& r : rooms) {
            if (!room_ids.insert(r.id).second)
                v.push_back("geometry.rooms: duplicate id " + std::to_string(r.id));
            if (!(r.area.min.x < r.area.max.x && r.area.min.y < r.area.max.y))
                v.push_back("geometry.rooms: room " + std::to_string(r.id) + " has empty area");
        }

        if (code_order < FecCodebook::kMinOrder || code_order > FecCodebook::kMaxOrder)
            v.emplace_back("experiment.code_order must be in [2, 8]");
        const int ids = 1 << std::clamp(code_order, 2, 8);
        std::set<int> node_ids;
        int mobiles = 0;
        int anchors = 0;
        for (const auto& n : nodes) {
            const std::string tag = "nodes: node " + std::to_string(n.id);
            if (!node_ids.insert(n.id).second)
                v.push_back(tag + " has a duplicate id");
            if (n.role == Role::Mobile) {
                ++mobiles;
                continue;
            }
            if (n.role == Role::Anchor)
                ++anchors;
            if (n.id < 0 || n.id >= ids)
                v.push_back(tag + " id must be in [0, " + std::to_string(ids) + ") to map onto a code");
            if (n.role == Role::Wpa && !n.cell)
                v.push_back(tag + " (wpa) needs a cell");
            if (n.role == Role::Wpa && n.adc_phase_ms
                && !(*n.adc_phase_ms >= 0.0 && *n.adc_phase_ms < duty.t_c_ms))
                v.push_back(tag + " adc_phase_ms must be in [0, t_c_ms)");
        }
        if (mobiles != 1)
            v.emplace_back("nodes: exactly one mobile node is required");
        if (anchors < 1)
            v.emplace_back("nodes: at least one anchor is required");

        if (positions.empty())
            v.emplace_back("experiment.positions must not be empty");
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const auto p = positions[i];
            const std::string tag = "experiment.positions[" + std::to_string(i) + "]";
            if (!room_at(p))
                v.push_back(tag + " lies outside every room");
            for (const auto& n : nodes)
                if (n.role != Role::Mobile && n.position == p)
                    v.push_back(tag + " coincides with node " + std::to_string(n.id));
        }
        if (rounds < 1)
            v.emplace_back("experiment.rounds must be >= 1");
        if (!(rx_window_ms >= 2.0 * mobile_profile.t_tx))
            v.emplace_back("experiment.rx_window_ms must cover request and reply (>= 2 t_tx)");
        if (!(round_offset_ms >= mobile_profile.t_adc))
            v.emplace_back("experiment.round_offset_ms must be >= t_adc");
        if (!(edge_db > 0.0))
            v.emplace_back("experiment.edge_db must be > 0");

        if (mode == Mode::WiPLocPlus) {
            if (!(duty.t_c_ms >= mobile_profile.t_tx))
                v.emplace_back("duty.t_c_ms must be >= t_tx in wiploc++ mode");
            if (!(duty.t_c_ms > wpa_profile.t_adc))
                v.emplace_back("duty.t_c_ms must exceed the ADC conversion time");
        }
        const double busy = round_offset_ms + 2.0 * rx_window_ms + duty.t_c_ms + 2.0 * mobile_profile.t_adc;
        if (!(busy < duty.t_m_ms))
            v.emplace_back("duty.t_m_ms too short for one localization round");
        return v;
    }

    void validate() const
    {
        if (auto v = violations(); !v.empty())
            throw ValidationError(std::move(v));
    }
};

struct GroundTruth {
    std::optional<int> room;
    std::optional<int> anchor; ///< Voronoi owner
    std::optional<int> cell;

    friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

inline GroundTruth ground_truth(const Scenario& s, Vec2 p)
{
    GroundTruth t;
    t.room = s.room_at(p);
    if (!t.room)
        throw InvalidParameter("position (" + std::to_string(p.x) + ", " + std::to_string(p.y)
                               + ") lies outside the geometry");
    double best = std::numeric_limits<double>::infinity();
    for (const auto* a : s.with_role(Role::Anchor)) {
        const double d = distance(a->position, p);
        if (d < best - 1e-9 || (std::abs(d - best) <= 1e-9 && a->id < *t.anchor)) {
            best = std::min(best, d);
            t.anchor = a->id;
        }
    }
    for (const auto* w : s.with_role(Role::Wpa)) {
        if (w->cell && w->cell->contains(p) && (!t.cell || w->id < *t.cell))
            t.cell = w->id;
    }
    return t;
}

/// Cell index on a regular grid anchored at `origin`.
inline std::pair<int, int> grid_cell(Vec2 p, Vec2 origin, double cell_size_m)
{
    if (!(cell_size_m > 0.0))
        throw InvalidParameter("cell size must be > 0");
    return {static_cast<int>(std::floor((p.x - origin.x) / cell_size_m)),
            static_cast<int>(std::floor((p.y - origin.y) / cell_size_m))};
}

} // namespace wiploc::sim

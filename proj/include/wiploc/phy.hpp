#pragma once

// Radio channel, capture/collision resolution and RF energy harvesting.

#include "wiploc/codec.hpp"
#include "wiploc/error.hpp"
#include "wiploc/geometry.hpp"
#include "wiploc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wiploc {

/// Log-distance path loss with a per-wall penalty.
struct ChannelModel {
    double ref_loss_db = 40.0; ///< loss at 1 m
    double exponent = 2.0;
    double wall_loss_db = 5.0;
    double capture_threshold_db = 4.0;
    double sensitivity_dbm = -90.0;

    std::vector<std::string> violations() const
    {
        std::vector<std::string> v;
        if (!(exponent > 0.0))
            v.emplace_back("channel.exponent must be > 0");
        if (!(capture_threshold_db >= 0.0))
            v.emplace_back("channel.capture_threshold_db must be >= 0");
        if (!(wall_loss_db >= 0.0))
            v.emplace_back("channel.wall_loss_db must be >= 0");
        return v;
    }
};

inline double path_loss_db(const ChannelModel& ch, Vec2 tx, Vec2 rx, std::span<const Segment> walls)
{
    const double d = distance(tx, rx);
    if (d <= 0.0)
        throw InvalidGeometry("path loss undefined for coincident positions");
    return ch.ref_loss_db + 10.0 * ch.exponent * std::log10(d)
         + ch.wall_loss_db * walls_crossed(tx, rx, walls);
}

inline double rx_power_dbm(const ChannelModel& ch, double tx_power_dbm, Vec2 tx, Vec2 rx,
                           std::span<const Segment> walls)
{
    return tx_power_dbm - path_loss_db(ch, tx, rx, walls);
}

struct CalibrationPoint {
    double distance_m;
    double power_mw;
};

/// Harvested power vs distance for one charger, interpolated log-log through
/// measured points.
struct WptModel {
    std::vector<CalibrationPoint> points{{1.0, 3.2}, {3.0, 0.79}, {4.0, 0.158}};
    double beam_halfangle_deg = 30.0;
    double floor_mw = 0.063;
    double wall_loss_db = 5.0;

    std::vector<std::string> violations() const
    {
        std::vector<std::string> v;
        if (points.size() < 2)
            v.emplace_back("wpt.points needs at least two calibration points");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i].distance_m > 0.0) || !(points[i].power_mw > 0.0))
                v.emplace_back("wpt.points must have positive distance and power");
            if (i > 0
                && !(points[i].distance_m > points[i - 1].distance_m
                     && points[i].power_mw < points[i - 1].power_mw))
                v.emplace_back("wpt.points must be strictly decreasing in power with distance");
        }
        if (!(beam_halfangle_deg > 0.0 && beam_halfangle_deg <= 180.0))
            v.emplace_back("wpt.beam_halfangle_deg must be in (0, 180]");
        if (!(floor_mw >= 0.0))
            v.emplace_back("wpt.floor_mw must be >= 0");
        if (!(wall_loss_db >= 0.0))
            v.emplace_back("wpt.wall_loss_db must be >= 0");
        return v;
    }

    /// On-axis harvested power at distance d, before the floor clamp.
    double on_axis_mw(double d) const
    {
        d = std::max(d, 1e-3);
        const auto& p = points;
        std::size_t seg = 0;
        while (seg + 2 < p.size() && d > p[seg + 1].distance_m)
            ++seg;
        const double x0 = std::log(p[seg].distance_m);
        const double x1 = std::log(p[seg + 1].distance_m);
        const double y0 = std::log(p[seg].power_mw);
        const double y1 = std::log(p[seg + 1].power_mw);
        // Exact at the knots so calibration points reproduce bit-for-bit.
        if (d == p[seg].distance_m)
            return p[seg].power_mw;
        if (d == p[seg + 1].distance_m)
            return p[seg + 1].power_mw;
        const double slope = (y1 - y0) / (x1 - x0);
        return std::exp(y0 + slope * (std::log(d) - x0));
    }
};

/// A powercaster: position plus boresight heading (degrees, 0 = +x, CCW).
struct Charger {
    Vec2 position;
    double heading_deg = 0.0;
};

inline bool in_beam(const WptModel& wpt, const Charger& ch, Vec2 node)
{
    const Vec2 v = node - ch.position;
    const double len = std::hypot(v.x, v.y);
    if (len == 0.0 || wpt.beam_halfangle_deg >= 180.0)
        return true;
    const double h = ch.heading_deg * std::numbers::pi / 180.0;
    const double cosang = (v.x * std::cos(h) + v.y * std::sin(h)) / len;
    const double ang = std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / std::numbers::pi;
    return ang <= wpt.beam_halfangle_deg + 1e-9;
}

inline double harvested_power_mw(const WptModel& wpt, const Charger& ch, Vec2 node,
                                 std::span<const Segment> walls)
{
    if (!in_beam(wpt, ch, node))
        return 0.0;
    double mw = wpt.on_axis_mw(distance(ch.position, node));
    const int n = walls.empty() ? 0 : walls_crossed(ch.position, node, walls);
    if (n > 0)
        mw *= std::pow(10.0, -wpt.wall_loss_db * n / 10.0);
    return mw < wpt.floor_mw ? 0.0 : mw;
}

/// dBm reading of the harvester output; nullopt when nothing is harvested.
inline std::optional<double> adc_reading_dbm(double harvested_mw)
{
    if (harvested_mw < 0.0)
        throw InvalidParameter("harvested power must be >= 0");
    if (harvested_mw == 0.0)
        return std::nullopt;
    return 10.0 * std::log10(harvested_mw);
}

struct Transmission {
    int sender = 0;
    Payload payload;
    double tx_power_dbm = 0.0;
    double start_ms = 0.0;
    double airtime_ms = 0.8;
    double preamble_window_ms = 0.008;
};

struct Reception {
    Transmission transmission;
    double rx_power_dbm = 0.0;
};

struct ReceptionOutcome {
    ChipSequence chips;
    bool crc_ok = false;
    std::vector<int> contributors; ///< strongest first
};

/// Capture or chip-level mixture of synchronised frames at one receiver.
///
/// Frames below sensitivity are dropped. A single survivor, or a strongest
/// frame at least capture_threshold_db above the runner-up, is received
/// intact. Otherwise every frame within the threshold of the strongest
/// contributes: chips on which they all agree pass through, the rest are
/// fair coin flips, and the CRC fails.
inline std::optional<ReceptionOutcome> resolve_collision(const ChannelModel& ch,
                                                         std::span<const Reception> receptions,
                                                         Rng& rng)
{
    std::vector<const Reception*> heard;
    for (const auto& r : receptions)
        if (r.rx_power_dbm >= ch.sensitivity_dbm)
            heard.push_back(&r);
    if (heard.empty())
        return std::nullopt;
    std::stable_sort(heard.begin(), heard.end(), [](const Reception* a, const Reception* b) {
        if (a->rx_power_dbm != b->rx_power_dbm)
            return a->rx_power_dbm > b->rx_power_dbm;
        return a->transmission.sender < b->transmission.sender;
    });

    ReceptionOutcome out;
    const double top = heard.front()->rx_power_dbm;
    if (heard.size() == 1 || top - heard[1]->rx_power_dbm >= ch.capture_threshold_db) {
        out.chips = heard.front()->transmission.payload.chips();
        out.crc_ok = true;
        out.contributors = {heard.front()->transmission.sender};
        return out;
    }

    std::vector<const ChipSequence*> mix;
    for (const auto* r : heard) {
        if (top - r->rx_power_dbm < ch.capture_threshold_db) {
            mix.push_back(&r->transmission.payload.chips());
            out.contributors.push_back(r->transmission.sender);
        }
    }
    const std::size_t n = mix.front()->size();
    for (const auto* m : mix)
        if (m->size() != n)
            throw MalformedPayload("colliding payloads differ in length");

    CoinFlipper coin(rng);
    out.chips.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto first = (*mix.front())[i];
        const bool agree = std::all_of(mix.begin(), mix.end(), [&](const ChipSequence* m) {
            return (*m)[i] == first;
        });
        out.chips[i] = agree ? first : coin.flip();
    }
    out.crc_ok = false;
    return out;
}

} // namespace wiploc

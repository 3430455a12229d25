#pragma once

#include "wiploc/energy.hpp"
#include "wiploc/error.hpp"
#include "wiploc/rng.hpp"
#include "wiploc/sim/metrics.hpp"
#include "wiploc/sim/simulator.hpp"

#include <cmath>
#include <future>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wiploc::sim {

enum class SweepParam { AnchorCount, TC, CaptureThreshold, TxPower };

inline SweepParam parse_sweep_param(std::string_view name)
{
    if (name == "anchors" || name == "anchor_count")
        return SweepParam::AnchorCount;
    if (name == "t_c" || name == "t_c_ms")
        return SweepParam::TC;
    if (name == "capture_threshold" || name == "capture_threshold_db")
        return SweepParam::CaptureThreshold;
    if (name == "tx_power" || name == "tx_power_dbm")
        return SweepParam::TxPower;
    throw InvalidParameter("unsupported sweep parameter '" + std::string(name)
                           + "' (expected anchors, t_c, capture_threshold or tx_power)");
}

inline std::string_view to_string(SweepParam p)
{
    switch (p) {
    case SweepParam::AnchorCount:
        return "anchors";
    case SweepParam::TC:
        return "t_c";
    case SweepParam::CaptureThreshold:
        return "capture_threshold";
    case SweepParam::TxPower:
        return "tx_power";
    }
    return "?";
}

/// Scenario for sweep point `index`. Point 0 keeps the scenario seed so a
/// one-value sweep reproduces a plain run.
inline Scenario sweep_point(const Scenario& base, SweepParam param, double value, std::size_t index)
{
    Scenario s = base;
    if (index > 0)
        s.seed = derive_seed(base.seed, {static_cast<std::uint64_t>(Stream::Sweep), index});
    switch (param) {
    case SweepParam::AnchorCount: {
        if (value < 1.0 || value != std::floor(value))
            throw InvalidParameter("anchor count must be a positive integer");
        const auto keep = static_cast<std::size_t>(value);
        std::size_t seen = 0;
        std::vector<NodeSpec> nodes;
        for (const auto& n : base.nodes) {
            if (n.role == Role::Anchor && seen++ >= keep)
                continue;
            nodes.push_back(n);
        }
        if (seen < keep)
            throw InvalidParameter("scenario has only " + std::to_string(seen) + " anchors");
        s.nodes = std::move(nodes);
        break;
    }
    case SweepParam::TC:
        s.duty.t_c_ms = value;
        for (auto& n : s.nodes)
            if (n.adc_phase_ms && *n.adc_phase_ms >= value)
                n.adc_phase_ms = std::fmod(*n.adc_phase_ms, value);
        break;
    case SweepParam::CaptureThreshold:
        s.channel.capture_threshold_db = value;
        break;
    case SweepParam::TxPower:
        for (auto& n : s.nodes)
            n.tx_power_dbm = value;
        break;
    }
    return s;
}

struct SweepPoint {
    double value = 0.0;
    MetricsReport report;
    std::optional<double> wpa_measured_mw; ///< mean ledger average over powered WPAs
    std::optional<double> wpa_model_mw;    ///< analytic expectation for this t_c
};

inline SweepPoint evaluate_point(const Scenario& s, SweepParam param, double value)
{
    SweepPoint pt;
    pt.value = value;
    const auto res = run(s);
    pt.report = metrics(res.traces, s.truth);
    double sum = 0.0;
    int n = 0;
    for (const auto& e : res.energy) {
        if (e.role == Role::Wpa && e.powered) {
            sum += e.ledger.average_power_mw();
            ++n;
        }
    }
    if (n > 0)
        pt.wpa_measured_mw = sum / n;
    if (param == SweepParam::TC) {
        try {
            pt.wpa_model_mw = wpa_average_power(s.duty, s.wpa_profile);
        } catch (const InfeasibleConfiguration&) {
        }
    }
    return pt;
}

inline std::vector<SweepPoint> sweep(const Scenario& base, SweepParam param, std::span<const double> values,
                                     bool parallel = false)
{
    std::vector<Scenario> points;
    for (std::size_t i = 0; i < values.size(); ++i) {
        points.push_back(sweep_point(base, param, values[i], i));
        points.back().validate();
    }
    std::vector<SweepPoint> out(values.size());
    if (!parallel) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = evaluate_point(points[i], param, values[i]);
        return out;
    }
    std::vector<std::future<SweepPoint>> jobs;
    for (std::size_t i = 0; i < values.size(); ++i)
        jobs.push_back(std::async(std::launch::async, evaluate_point, std::cref(points[i]), param, values[i]));
    for (std::size_t i = 0; i < jobs.size(); ++i)
        out[i] = jobs[i].get();
    return out;
}

} // namespace wiploc::sim

#pragma once

// CSV and text writers for run results.

#include "wiploc/sim/metrics.hpp"
#include "wiploc/sim/simulator.hpp"
#include "wiploc/sim/sweep.hpp"

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace wiploc::io {

/// Fixed-format number; keeps files byte-stable across runs.
inline std::string num(double v, int decimals = 3)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string opt_int(const std::optional<int>& v)
{
    return v ? std::to_string(*v) : std::string();
}

inline std::string decodes_field(const std::vector<DecodeResult>& d)
{
    std::string out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i)
            out += ';';
        out += std::to_string(d[i].anchor_id) + ':' + std::to_string(d[i].distance);
    }
    return out;
}

inline void write_trace_csv(std::ostream& os, const std::vector<sim::RoundTrace>& traces)
{
    os << "round,position,x,y,true_room,true_anchor,true_cell,xi_dbm,no_reply,room_decodes,cell_decodes,"
          "est_anchor,est_room,est_cell,reply,correct\n";
    for (const auto& t : traces) {
        os << t.round << ',' << t.position << ',' << num(t.where.x) << ',' << num(t.where.y) << ','
           << opt_int(t.truth.room) << ',' << opt_int(t.truth.anchor) << ',' << opt_int(t.truth.cell) << ','
           << (t.xi_dbm ? num(*t.xi_dbm) : std::string()) << ',' << (t.no_reply_flag ? 1 : 0) << ','
           << decodes_field(t.room_decodes) << ',' << decodes_field(t.cell_decodes) << ','
           << opt_int(t.estimate.anchor) << ',' << opt_int(t.estimate.room) << ',' << opt_int(t.estimate.cell)
           << ',' << (t.reply ? 1 : 0) << ',' << (t.correct ? 1 : 0) << '\n';
    }
}

inline void write_energy_csv(std::ostream& os, const std::vector<sim::NodeEnergy>& energy)
{
    os << "node_id,role,state,time_ms,energy_uj\n";
    for (const auto& e : energy) {
        for (auto st : kPowerStates) {
            os << e.id << ',' << to_string(e.role) << ',' << to_string(st) << ',' << num(e.ledger.time_ms(st))
               << ',' << num(e.ledger.energy_uj(st)) << '\n';
        }
    }
}

inline void write_metrics(std::ostream& os, const sim::MetricsReport& m, const std::string& prefix = "")
{
    os << prefix << "truth: " << to_string(m.truth) << '\n';
    os << prefix << "requests: " << m.requests << '\n';
    os << prefix << "replies: " << m.replies << '\n';
    os << prefix << "correct: " << m.correct << '\n';
    os << prefix << "prr_pct: " << num(m.prr, 2) << '\n';
    os << prefix << "accuracy_pct: " << (m.accuracy ? num(*m.accuracy, 2) : std::string("n/a")) << '\n';
}

inline void write_report(std::ostream& os, const sim::Scenario& s, const sim::RunResult& r)
{
    os << "scenario: " << s.name << '\n';
    os << "mode: " << to_string(s.mode) << '\n';
    os << "seed: " << s.seed << '\n';
    os << "codec: " << (s.codec ? "on" : "off") << '\n';
    os << "positions: " << s.positions.size() << '\n';
    os << "rounds_per_position: " << s.rounds << '\n';
    os << "simulated_ms: " << num(to_ms(r.end), 1) << '\n';
    const auto m = sim::metrics(r.traces, s.truth);
    write_metrics(os, m);
    if (s.mode == Mode::WiPLocPlus && s.truth == sim::TruthMode::Cell)
        write_metrics(os, sim::metrics(r.traces, sim::TruthMode::Room), "room_level.");

    os << "\nper_position:\n";
    os << "  # index x y requests replies correct prr_pct accuracy_pct\n";
    for (const auto& p : m.positions) {
        os << "  " << p.position << ' ' << num(p.where.x, 2) << ' ' << num(p.where.y, 2) << ' ' << p.requests << ' '
           << p.replies << ' ' << p.correct << ' ' << num(p.prr, 2) << ' '
           << (p.accuracy ? num(*p.accuracy, 2) : std::string("n/a")) << '\n';
    }

    os << "\nenergy:\n";
    os << "  # node role powered avg_mw tx_ms rx_ms adc_ms wfi_ms\n";
    for (const auto& e : r.energy) {
        os << "  " << e.id << ' ' << to_string(e.role) << ' ' << (e.powered ? "yes" : "no") << ' '
           << num(e.ledger.average_power_mw(), 4) << ' ' << num(e.ledger.time_ms(PowerState::Tx), 2) << ' '
           << num(e.ledger.time_ms(PowerState::Rx), 2) << ' ' << num(e.ledger.time_ms(PowerState::Adc), 2) << ' '
           << num(e.ledger.time_ms(PowerState::Wfi), 2) << '\n';
    }
}

inline void write_sweep_csv(std::ostream& os, sim::SweepParam param, const std::vector<sim::SweepPoint>& pts)
{
    os << to_string(param) << ",requests,replies,correct,prr_pct,accuracy_pct,wpa_measured_mw,wpa_model_mw\n";
    for (const auto& p : pts) {
        os << num(p.value, 3) << ',' << p.report.requests << ',' << p.report.replies << ',' << p.report.correct
           << ',' << num(p.report.prr, 2) << ',' << (p.report.accuracy ? num(*p.report.accuracy, 2) : "") << ','
           << (p.wpa_measured_mw ? num(*p.wpa_measured_mw, 4) : "") << ','
           << (p.wpa_model_mw ? num(*p.wpa_model_mw, 4) : "") << '\n';
    }
}

} // namespace wiploc::io

#pragma once

#include "wiploc/codec.hpp"
#include "wiploc/error.hpp"
#include "wiploc/protocol.hpp"
#include "wiploc/sim/scenario.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace wiploc::sim {

/// One row per localization round.
struct RoundTrace {
    int round = 0;
    int position = 0;
    Vec2 where;
    GroundTruth truth;
    std::optional<double> xi_dbm;
    bool no_reply_flag = false;
    bool cell_requested = false;
    std::vector<DecodeResult> room_decodes;
    std::vector<DecodeResult> cell_decodes;
    LocationEstimate estimate;
    bool reply = false;   ///< judged under the scenario's truth mode
    bool correct = false;
};

struct Verdict {
    bool reply = false;
    bool correct = false;
};

inline Verdict judge(const LocationEstimate& est, const GroundTruth& truth, TruthMode mode)
{
    switch (mode) {
    case TruthMode::Any:
        return {est.anchor.has_value(), est.anchor.has_value()};
    case TruthMode::Room:
        return {est.anchor.has_value(), est.anchor.has_value() && est.room == truth.room};
    case TruthMode::Voronoi:
        return {est.anchor.has_value(), est.anchor.has_value() && est.anchor == truth.anchor};
    case TruthMode::Cell:
        return {est.cell.has_value(), est.cell.has_value() && est.cell == truth.cell};
    }
    return {};
}

struct PositionMetrics {
    int position = 0;
    Vec2 where;
    int requests = 0;
    int replies = 0;
    int correct = 0;
    double prr = 0.0;               ///< percent
    std::optional<double> accuracy; ///< percent of replies; unset without replies
};

struct MetricsReport {
    TruthMode truth = TruthMode::Room;
    std::vector<PositionMetrics> positions;
    int requests = 0;
    int replies = 0;
    int correct = 0;
    double prr = 0.0;               ///< mean over positions
    std::optional<double> accuracy; ///< mean over positions that got replies
};

/// PRR = replies / requests and accuracy = correct / replies, computed per
/// position and then averaged over positions.
inline MetricsReport metrics(std::span<const RoundTrace> traces, TruthMode mode)
{
    if (traces.empty())
        throw UndefinedMetrics("no location requests were sent");
    std::map<int, PositionMetrics> by_pos;
    for (const auto& t : traces) {
        auto& m = by_pos[t.position];
        m.position = t.position;
        m.where = t.where;
        const auto v = judge(t.estimate, t.truth, mode);
        ++m.requests;
        m.replies += v.reply ? 1 : 0;
        m.correct += v.correct ? 1 : 0;
    }
    MetricsReport r;
    r.truth = mode;
    double prr_sum = 0.0;
    double acc_sum = 0.0;
    int acc_n = 0;
    for (auto& [pos, m] : by_pos) {
        m.prr = 100.0 * m.replies / m.requests;
        if (m.replies > 0) {
            m.accuracy = 100.0 * m.correct / m.replies;
            acc_sum += *m.accuracy;
            ++acc_n;
        }
        prr_sum += m.prr;
        r.requests += m.requests;
        r.replies += m.replies;
        r.correct += m.correct;
        r.positions.push_back(m);
    }
    r.prr = prr_sum / static_cast<double>(r.positions.size());
    if (acc_n > 0)
        r.accuracy = acc_sum / acc_n;
    return r;
}

} // namespace wiploc::sim

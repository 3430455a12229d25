#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace wiploc;
using namespace wiploc::sim;
using support::one_room;
using support::wpa_line;

namespace {

RoundTrace row(int position, bool reply, bool correct)
{
    RoundTrace t;
    t.position = position;
    if (reply) {
        t.estimate.anchor = correct ? 0 : 1;
        t.estimate.room = correct ? 1 : 2;
    }
    t.truth.room = 1;
    return t;
}

std::vector<RoundTrace> rows(int position, int requests, int replies, int correct)
{
    std::vector<RoundTrace> out;
    for (int i = 0; i < requests; ++i)
        out.push_back(row(position, i < replies, i < correct));
    return out;
}

} // namespace

TEST(EventQueue, TotalOrder)
{
    std::mt19937_64 rng(3);
    EventQueue q;
    const EventKind kinds[] = {EventKind::ChargerOff, EventKind::ChargerOn, EventKind::TxEnd, EventKind::TxStart,
                               EventKind::AdcStart,   EventKind::AdcSample, EventKind::Timer};
    for (int i = 0; i < 2000; ++i)
        q.push({Micros{static_cast<long>(rng() % 50)}, kinds[rng() % 7], static_cast<int>(rng() % 5)});
    Event prev = q.pop();
    while (!q.empty()) {
        const Event e = q.pop();
        const auto key = [](const Event& x) { return std::make_tuple(x.time, priority(x.kind), x.node, x.seq); };
        EXPECT_LT(key(prev), key(e));
        prev = e;
    }
}

TEST(EventQueue, TieOrder)
{
    EXPECT_LT(priority(EventKind::ChargerOff), priority(EventKind::TxEnd));
    EXPECT_LT(priority(EventKind::TxEnd), priority(EventKind::TxStart));
    EXPECT_LT(priority(EventKind::TxStart), priority(EventKind::AdcStart));
    EXPECT_LT(priority(EventKind::AdcSample), priority(EventKind::Timer));
}

TEST(GroundTruth, Examples)
{
    auto s = one_room();
    s.rooms.push_back({2, "other", {{4, 0}, {8, 4}}});
    NodeSpec a2;
    a2.id = 2;
    a2.position = {3, 1};
    s.nodes.push_back(a2);
    EXPECT_EQ(ground_truth(s, {1.5, 1.5}).room, 1);
    EXPECT_EQ(ground_truth(s, {6, 1}).room, 2);
    // (2, y) is equidistant from anchors at x = 1 and x = 3.
    EXPECT_EQ(ground_truth(s, {2, 3}).anchor, 0);
    EXPECT_EQ(ground_truth(s, {2.5, 3}).anchor, 2);
    EXPECT_THROW(ground_truth(s, {9, 9}), InvalidParameter);
}

TEST(GroundTruth, Cells)
{
    const auto s = wpa_line({0.0, 1.0, 2.0});
    EXPECT_EQ(ground_truth(s, {1.0, 0.5}).cell, 1);
    EXPECT_EQ(ground_truth(s, {1.2, 0.5}).cell, 2);
    EXPECT_FALSE(ground_truth(s, {4.0, 0.5}).cell);
}

TEST(GroundTruth, GridCell)
{
    EXPECT_EQ(grid_cell({3.1, 0.5}, {0, 0}, 2.0), std::make_pair(1, 0));
    EXPECT_EQ(grid_cell({5.9, 5.9}, {0, 0}, 2.0), std::make_pair(2, 2));
    EXPECT_EQ(grid_cell({-0.1, 0}, {0, 0}, 2.0), std::make_pair(-1, 0));
    EXPECT_EQ(grid_cell({5, 3}, {4, 0}, 2.0), std::make_pair(0, 1));
    EXPECT_THROW(grid_cell({0, 0}, {0, 0}, 0.0), InvalidParameter);
}

TEST(Validation, ListsViolations)
{
    auto s = one_room();
    NodeSpec m2;
    m2.id = 101;
    m2.role = Role::Mobile;
    s.nodes.push_back(m2);
    s.positions.push_back({10, 10});
    s.positions.push_back({1, 1});
    try {
        s.validate();
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.violations().size(), 3u) << e.what();
    }
}

TEST(Validation, IdsMustMapOntoCodes)
{
    auto s = one_room();
    s.nodes[0].id = 16;
    EXPECT_THROW(s.validate(), ValidationError);
    s.nodes[0].id = 15;
    EXPECT_NO_THROW(s.validate());
}

TEST(Validation, DutyMustFit)
{
    auto s = wpa_line({0.0});
    s.duty = {15.0, 10.0};
    EXPECT_THROW(s.validate(), ValidationError);
}

TEST(Metrics, Examples)
{
    auto m = metrics(rows(0, 50, 50, 50), TruthMode::Room);
    EXPECT_DOUBLE_EQ(m.prr, 100.0);
    EXPECT_DOUBLE_EQ(*m.accuracy, 100.0);
    m = metrics(rows(0, 50, 45, 43), TruthMode::Room);
    EXPECT_DOUBLE_EQ(m.prr, 90.0);
    EXPECT_NEAR(*m.accuracy, 95.6, 0.05);
    EXPECT_THROW(metrics(std::vector<RoundTrace>{}, TruthMode::Room), UndefinedMetrics);
}

TEST(Metrics, AveragedNotPooled)
{
    auto t = rows(0, 10, 10, 10);
    const auto more = rows(1, 40, 20, 10);
    t.insert(t.end(), more.begin(), more.end());
    const auto m = metrics(t, TruthMode::Room);
    EXPECT_DOUBLE_EQ(m.prr, (100.0 + 50.0) / 2);
    EXPECT_DOUBLE_EQ(*m.accuracy, (100.0 + 50.0) / 2);
    EXPECT_EQ(m.requests, 50);
    EXPECT_EQ(m.replies, 30);
}

TEST(Metrics, AccuracySkipsSilentPositions)
{
    auto t = rows(0, 10, 0, 0);
    const auto more = rows(1, 10, 10, 5);
    t.insert(t.end(), more.begin(), more.end());
    const auto m = metrics(t, TruthMode::Room);
    EXPECT_DOUBLE_EQ(m.prr, 50.0);
    EXPECT_DOUBLE_EQ(*m.accuracy, 50.0);
    EXPECT_FALSE(m.positions[0].accuracy);
    EXPECT_FALSE(metrics(rows(0, 5, 0, 0), TruthMode::Room).accuracy);
}

TEST(Run, SingleAnchorIsPerfect)
{
    const auto r = run(one_room());
    const auto m = metrics(r.traces, TruthMode::Room);
    EXPECT_DOUBLE_EQ(m.prr, 100.0);
    EXPECT_DOUBLE_EQ(*m.accuracy, 100.0);
    for (const auto& t : r.traces)
        EXPECT_EQ(t.room_decodes, (std::vector<DecodeResult>{{0, 0}}));
}

TEST(Run, OutOfRange)
{
    auto s = one_room();
    s.channel.sensitivity_dbm = -20.0;
    const auto m = metrics(run(s).traces, TruthMode::Room);
    EXPECT_DOUBLE_EQ(m.prr, 0.0);
    EXPECT_FALSE(m.accuracy);
}

TEST(Run, Deterministic)
{
    for (const char* name : {"rl-3anchor", "cl-room"}) {
        const auto s = support::bundled(name);
        EXPECT_EQ(support::trace_bytes(run(s)), support::trace_bytes(run(s))) << name;
    }
    auto s = support::bundled("rl-3anchor");
    const auto a = support::trace_bytes(run(s));
    s.seed += 1;
    EXPECT_NE(a, support::trace_bytes(run(s)));
}

TEST(Run, RunOnlyOnce)
{
    Simulator sim(one_room());
    sim.run();
    EXPECT_THROW(sim.run(), std::logic_error);
}

TEST(Run, InvalidScenarioRejected)
{
    auto s = one_room();
    s.positions.clear();
    EXPECT_THROW(Simulator{s}, ValidationError);
}

TEST(Run, Conservation)
{
    const auto s = support::bundled("rl-3anchor");
    const auto r = run(s);
    ASSERT_EQ(r.traces.size(), s.positions.size() * static_cast<std::size_t>(s.rounds));
    for (std::size_t i = 0; i < r.traces.size(); ++i) {
        EXPECT_EQ(r.traces[i].round, static_cast<int>(i));
        EXPECT_EQ(r.traces[i].position, static_cast<int>(i) / s.rounds);
    }
    const auto m = metrics(r.traces, s.truth);
    for (const auto& p : m.positions) {
        EXPECT_LE(p.replies, p.requests);
        EXPECT_LE(p.correct, p.replies);
    }
}

TEST(Run, EventCausality)
{
    const auto s = support::bundled("cl-corridor");
    Micros last{0};
    std::map<int, int> off;
    bool ok = true;
    run(s, [&](const Simulator&, const Event& e) {
        ok = ok && e.time >= last;
        last = e.time;
        if (e.kind == EventKind::ChargerOff)
            ++off[e.node];
        if (e.kind == EventKind::ChargerOn)
            ok = ok && --off[e.node] >= 0;
    });
    EXPECT_TRUE(ok);
    for (const auto& [node, n] : off)
        EXPECT_EQ(n, 0);
}

TEST(Run, MobileRadioDutyBound)
{
    // TX + RX per round stays within one request plus the RX window,
    // however many anchors answer.
    for (const char* name : {"rl-1anchor", "rl-2anchor", "rl-3anchor", "sc"}) {
        const auto s = support::bundled(name);
        std::map<int, double> active;
        Micros since{0};
        int round = 0;
        PowerState st = PowerState::Wfi;
        const int mobile = s.with_role(Role::Mobile).front()->id;
        run(s, [&](const Simulator& sim, const Event& e) {
            if (st == PowerState::Tx || st == PowerState::Rx)
                active[round] += to_ms(e.time - since);
            since = e.time;
            round = sim.round();
            st = sim.state(mobile);
        });
        const double bound = s.mobile_profile.t_tx + s.rx_window_ms;
        for (const auto& [r, ms] : active)
            EXPECT_LE(ms, bound + 1e-9) << name << " round " << r;
    }
}

TEST(Run, WpaLedgerMatchesClosedForm)
{
    // Sample exactly t_c / 2 after the pulse. The WPA then listens from that
    // sample until its reply starts: t_c / 2 + two frame times.
    const double pulse = 1.0 + 0.8; // round offset + request
    auto s = wpa_line({pulse + 5.0}, 1);
    s.theta_dbm = 100.0; // everything is "far", so the WPA stays awake
    const auto r = run(s);
    const auto& w = r.energy.front();
    ASSERT_EQ(w.role, Role::Wpa);
    ASSERT_EQ(r.traces.front().estimate.cell, 1);
    const auto& p = s.wpa_profile;
    const double expect = wpa_average_power(s.duty, p, s.duty.t_c_ms / 2 + 2 * p.t_tx);
    EXPECT_NEAR(w.ledger.average_power_mw(), expect, 0.01 * expect);
    EXPECT_NEAR(w.ledger.time_ms(PowerState::Adc), 100 * p.t_adc, 1e-9);
    EXPECT_NEAR(w.ledger.total_time_ms(), s.duty.t_m_ms, 1e-9);
}

TEST(Run, WpaWakesForEveryPhase)
{
    for (int base = 0; base < 100; base += 15) {
        std::vector<double> phases;
        for (int i = base; i < std::min(base + 15, 100); ++i)
            phases.push_back(i * 0.1);
        const auto s = wpa_line(phases);
        int checks = 0;
        run(s, [&](const Simulator& sim, const Event& e) {
            if (e.kind != EventKind::TxStart)
                return;
            const auto& f = sim.frame(e.arg);
            if (f.packet.kind == PacketKind::SleepCommand) {
                ++checks;
                for (std::size_t i = 1; i <= phases.size(); ++i)
                    EXPECT_EQ(sim.state(static_cast<int>(i)), PowerState::Rx) << "phase " << phases[i - 1];
            }
        });
        EXPECT_EQ(checks, s.rounds);
    }
}

TEST(Run, CommandedWpasStaySilent)
{
    const auto s = support::bundled("cl-room");
    std::set<int> slept;
    int replies = 0;
    run(s, [&](const Simulator& sim, const Event& e) {
        if (e.kind == EventKind::Timer && e.tag == Simulator::kRoundStart)
            slept.clear();
        if (e.kind != EventKind::TxStart)
            return;
        const auto& f = sim.frame(e.arg);
        if (f.packet.kind == PacketKind::SleepCommand)
            slept.insert(f.packet.sleep_set.begin(), f.packet.sleep_set.end());
        if (f.packet.kind == PacketKind::LocationReply && s.find(f.sender)->role == Role::Wpa) {
            ++replies;
            EXPECT_FALSE(slept.contains(f.sender));
        }
    });
    EXPECT_GT(replies, 0);
}

TEST(Run, RetryWakesComplement)
{
    // The far WPAs cannot be heard, so every far-first round fails and the
    // next request carries the no-reply flag.
    auto s = support::bundled("cl-room");
    for (auto& n : s.nodes)
        if (n.role == Role::Wpa && (n.id == 2 || n.id == 4))
            n.tx_power_dbm = -120.0;
    bool flagged = false;
    int retries = 0;
    int requests = 0;
    run(s, [&](const Simulator& sim, const Event& e) {
        if (e.kind != EventKind::TxStart)
            return;
        const auto& f = sim.frame(e.arg);
        if (f.packet.kind != PacketKind::LocationRequest)
            return;
        if (f.packet.target == RequestTarget::Anchors) {
            flagged = f.packet.no_reply;
            return;
        }
        ++requests;
        retries += flagged;
        const auto& part = sim.partition(0);
        const auto& want = flagged ? retry_awake(part, f.packet.xi_dbm) : first_choice_awake(part, f.packet.xi_dbm);
        std::vector<int> awake;
        for (int id : {1, 2, 3, 4})
            if (sim.wpa_awake(id))
                awake.push_back(id);
        EXPECT_EQ(awake, want) << "round " << sim.round();
    });
    EXPECT_GT(requests, 0);
    EXPECT_GT(retries, 0);
}

TEST(Run, DeadZone)
{
    auto s = support::bundled("dz");
    const auto with = metrics(run(s).traces, s.truth);
    for (const auto& p : with.positions)
        EXPECT_GT(p.prr, 95.0) << "position " << p.position;

    s.codec = false;
    const auto without = metrics(run(s).traces, s.truth);
    std::vector<int> dead;
    for (const auto& p : without.positions)
        if (p.prr == 0.0)
            dead.push_back(p.position);
    ASSERT_FALSE(dead.empty());
    EXPECT_EQ(dead.back() - dead.front() + 1, static_cast<int>(dead.size()));
}

TEST(Run, UnpoweredWpaIsIdle)
{
    auto s = wpa_line({1.0, 2.0});
    s.nodes[2].position = {0, 1.9}; // outside the beam
    s.nodes[2].cell = Rect{{-0.5, 1.5}, {0.5, 2}};
    s.positions = {{2.05, 1.0}};
    Simulator sim(s);
    EXPECT_TRUE(sim.powered(1));
    EXPECT_FALSE(sim.powered(2));
    const auto r = sim.run();
    EXPECT_EQ(r.energy.at(1).ledger.total_time_ms(), 0.0);
}

TEST(Sweep, SingleValueEqualsRun)
{
    const auto s = support::bundled("sc");
    const double v = 4.0;
    const auto pts = sweep(s, SweepParam::AnchorCount, std::span<const double>(&v, 1));
    const auto ref = metrics(run(s).traces, s.truth);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].report.replies, ref.replies);
    EXPECT_EQ(pts[0].report.correct, ref.correct);
    EXPECT_EQ(pts[0].report.prr, ref.prr);
}

TEST(Sweep, ParallelEqualsSerial)
{
    const auto s = support::bundled("sc");
    const std::vector<double> v{2, 3, 4};
    const auto a = sweep(s, SweepParam::AnchorCount, v, false);
    const auto b = sweep(s, SweepParam::AnchorCount, v, true);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].value, b[i].value);
        EXPECT_EQ(a[i].report.correct, b[i].report.correct);
        EXPECT_EQ(a[i].report.prr, b[i].report.prr);
    }
}

TEST(Sweep, AnchorCountTrend)
{
    const auto s = support::bundled("sc");
    const std::vector<double> v{2, 3, 4};
    const auto pts = sweep(s, SweepParam::AnchorCount, v);
    for (std::size_t i = 1; i < pts.size(); ++i) {
        EXPECT_LE(pts[i].report.prr, pts[i - 1].report.prr);
        EXPECT_LE(*pts[i].report.accuracy, *pts[i - 1].report.accuracy);
    }
}

TEST(Sweep, TcCurveHasInteriorMinimum)
{
    auto s = support::bundled("cl-room");
    s.positions.resize(1);
    s.rounds = 2;
    std::vector<double> v;
    for (double tc = 2.0; tc <= 40.0; tc += 2.0)
        v.push_back(tc);
    const auto pts = sweep(s, SweepParam::TC, v, true);
    std::size_t best = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        ASSERT_TRUE(pts[i].wpa_model_mw);
        if (*pts[i].wpa_model_mw < *pts[best].wpa_model_mw)
            best = i;
    }
    EXPECT_GT(best, 0u);
    EXPECT_LT(best + 1, pts.size());
    EXPECT_NEAR(v[best], optimal_tc(s.wpa_profile, s.duty.t_m_ms), 2.0);
    for (const auto& p : pts)
        EXPECT_TRUE(p.wpa_measured_mw);
}

TEST(Run, WpaLedgerFollowsModelAcrossTc)
{
    // Periods divide t_m so the sample count is exact. Fifteen WPAs spread
    // evenly after the pulse wait t_c / 2 on average for their first sample.
    for (double tc : {4.0, 8.0, 10.0, 20.0, 40.0, 50.0}) {
        std::vector<double> phases;
        for (int i = 0; i < 15; ++i)
            phases.push_back(std::round(1000.0 * std::fmod(1.8 + tc * (i + 0.5) / 15.0, tc)) / 1000.0);
        auto s = wpa_line(phases, 1);
        s.duty.t_c_ms = tc;
        s.theta_dbm = 100.0;
        const auto r = run(s);
        double sum = 0.0;
        for (const auto& e : r.energy)
            if (e.role == Role::Wpa)
                sum += e.ledger.average_power_mw();
        const double measured = sum / 15.0;
        const auto& p = s.wpa_profile;
        const double model = wpa_average_power(s.duty, p, tc / 2 + 2 * p.t_tx);
        EXPECT_NEAR(measured, model, 0.03 * model) << "t_c " << tc;
    }
}

TEST(Sweep, Errors)
{
    EXPECT_THROW(parse_sweep_param("walls"), InvalidParameter);
    EXPECT_EQ(parse_sweep_param("anchors"), SweepParam::AnchorCount);
    EXPECT_EQ(parse_sweep_param("t_c"), SweepParam::TC);
    const auto s = support::bundled("sc");
    const double v = 9.0;
    EXPECT_THROW(sweep(s, SweepParam::AnchorCount, std::span<const double>(&v, 1)), InvalidParameter);
}

TEST(Bundled, AllValidateAndRun)
{
    for (const auto& f : support::bundled_files()) {
        SCOPED_TRACE(f.string());
        const auto s = io::load_scenario(f);
        const auto r = run(s);
        EXPECT_EQ(r.traces.size(), s.positions.size() * static_cast<std::size_t>(s.rounds));
        EXPECT_NO_THROW(metrics(r.traces, s.truth));
    }
}

#pragma once

// Discrete-event execution of a scenario: one mobile teleported across test
// positions, always-on anchors with chargers, and duty-cycled WPAs.

#include "wiploc/codec.hpp"
#include "wiploc/energy.hpp"
#include "wiploc/phy.hpp"
#include "wiploc/protocol.hpp"
#include "wiploc/rng.hpp"
#include "wiploc/sim/event_queue.hpp"
#include "wiploc/sim/metrics.hpp"
#include "wiploc/sim/scenario.hpp"
#include "wiploc/time.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wiploc::sim {

struct NodeEnergy {
    int id = 0;
    Role role = Role::Wpa;
    bool powered = true;
    EnergyLedger ledger;
};

struct RunResult {
    std::vector<RoundTrace> traces;
    std::vector<NodeEnergy> energy; ///< mobile and WPAs, by id
    Micros end{0};
};

struct Frame {
    int sender = 0;
    Packet packet;
    Payload chips; ///< what goes on the air
    double tx_power_dbm = 0.0;
    Micros start{0};
    Micros end{0};
    bool measure_xi = false;
};

class Simulator {
  public:
    /// Called before each event is processed.
    using Observer = std::function<void(const Simulator&, const Event&)>;

    enum TimerTag : int { kRoundStart = 1, kRxDeadline = 2 };
    enum AdcTag : int { kAdcPeriodic = 0, kAdcBeforeTx = 1 };

    explicit Simulator(Scenario scenario)
        : s_(std::move(scenario)), codec_(std::clamp(s_.code_order, 2, 8))
    {
        s_.validate();
        build();
    }

    void set_observer(Observer o) { observer_ = std::move(o); }

    RunResult run()
    {
        if (ran_)
            throw std::logic_error("Simulator::run may only be called once");
        ran_ = true;
        const int total = total_rounds();
        end_ = Micros{static_cast<Micros::rep>(total) * t_m_.count()};
        schedule_round(0);
        for (auto& n : nodes_)
            if (n.spec.role == Role::Wpa && n.powered)
                schedule_first_adc(n);

        while (!queue_.empty() && queue_.top().time < end_) {
            const Event e = queue_.pop();
            now_ = e.time;
            if (observer_)
                observer_(*this, e);
            dispatch(e);
        }
        now_ = end_;
        if (round_ >= 0)
            finalize_round();

        RunResult r;
        r.traces = std::move(traces_);
        r.end = end_;
        for (auto& n : nodes_) {
            if (!n.profile)
                continue;
            close_ledger(n);
            r.energy.push_back({n.spec.id, n.spec.role, n.powered, n.ledger});
        }
        return r;
    }

    // -- queries, mostly for observers and tests --------------------------

    Micros now() const noexcept { return now_; }
    int round() const noexcept { return round_; }
    const Scenario& scenario() const noexcept { return s_; }

    PowerState state(int id) const { return node(id).state; }
    bool powered(int id) const { return node(id).powered; }
    bool wpa_awake(int id) const { return node(id).wpa && node(id).wpa->awake(); }
    const Frame& frame(std::int64_t id) const { return frames_.at(static_cast<std::size_t>(id)); }
    int mobile_id() const { return nodes_[mobile_].spec.id; }
    Vec2 mobile_position() const { return nodes_[mobile_].pos; }

    const CellPartition& partition(int anchor_id) const
    {
        return node(anchor_id).anchor.value().partition;
    }

    std::optional<int> associated_anchor(int wpa_id) const
    {
        auto it = association_.find(wpa_id);
        return it == association_.end() ? std::nullopt : std::optional<int>(it->second);
    }

    /// Harvested power at a point given the current charger states.
    double harvest_mw(Vec2 p) const
    {
        double mw = 0.0;
        for (const auto& n : nodes_) {
            if (n.spec.role != Role::Anchor || n.chargers_off > 0)
                continue;
            mw += anchor_harvest_mw(n, p);
        }
        return mw;
    }

  private:
    struct Lock {
        Micros start{0};
        Micros end{0};
        std::vector<std::int64_t> frames;
        std::vector<Reception> receptions;
    };

    struct Node {
        NodeSpec spec;
        Vec2 pos;
        PowerState state = PowerState::Wfi;
        Micros since{0};
        EnergyLedger ledger;
        const PowerProfile* profile = nullptr; ///< null: mains powered, not metered
        bool powered = true;
        std::optional<Lock> lock;
        std::uint64_t rx_gen = 0;
        int chargers_off = 0;
        std::uint64_t resolutions = 0;
        std::optional<AnchorConfig> anchor;
        std::optional<WpaMachine> wpa;
    };

    // -- setup ------------------------------------------------------------

    int total_rounds() const { return s_.rounds * static_cast<int>(s_.positions.size()); }

    void build()
    {
        t_m_ = from_ms(s_.duty.t_m_ms);
        t_c_ = from_ms(s_.duty.t_c_ms);
        t_adc_ = from_ms(s_.wpa_profile.t_adc);
        t_adc_mobile_ = from_ms(s_.mobile_profile.t_adc);
        offset_ = from_ms(s_.round_offset_ms);

        auto specs = s_.nodes;
        std::sort(specs.begin(), specs.end(), [](const NodeSpec& a, const NodeSpec& b) { return a.id < b.id; });
        for (auto& spec : specs) {
            Node n;
            n.spec = spec;
            n.pos = spec.position;
            if (spec.role == Role::Anchor)
                n.state = PowerState::Rx;
            else if (spec.role == Role::Mobile)
                n.profile = &s_.mobile_profile;
            else
                n.profile = &s_.wpa_profile;
            nodes_.push_back(std::move(n));
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            index_[nodes_[i].spec.id] = i;
            if (nodes_[i].spec.role == Role::Mobile)
                mobile_ = i;
        }

        LocationContext ctx;
        for (auto& n : nodes_) {
            if (n.spec.role == Role::Anchor)
                ctx.room_of_anchor[n.spec.id] = s_.room_at(n.pos);
        }

        // WPAs run on harvest alone; each one belongs to the anchor that
        // feeds it most.
        std::map<int, std::vector<WpaReading>> readings;
        for (auto& n : nodes_) {
            if (n.spec.role != Role::Wpa)
                continue;
            const double total = harvest_mw(n.pos);
            n.powered = total > 0.0;
            if (!n.powered)
                continue;
            ctx.wpa_ids.insert(n.spec.id);
            int best = -1;
            double best_mw = 0.0;
            for (const auto& a : nodes_) {
                if (a.spec.role != Role::Anchor)
                    continue;
                const double mw = anchor_harvest_mw(a, n.pos);
                if (mw > best_mw) {
                    best_mw = mw;
                    best = a.spec.id;
                }
            }
            association_[n.spec.id] = best;
            readings[best].push_back({n.spec.id, adc_reading_dbm(total)});

            WpaConfig wc;
            wc.id = n.spec.id;
            wc.group_id = n.spec.group_id;
            wc.t_c = t_c_;
            wc.reply_payload = reply_payload(n.spec.id);
            wc.edge_db = s_.edge_db;
            n.wpa.emplace(std::move(wc));
        }

        for (auto& n : nodes_) {
            if (n.spec.role != Role::Anchor)
                continue;
            AnchorConfig ac;
            ac.id = n.spec.id;
            ac.group_id = n.spec.group_id;
            ac.mode = s_.mode;
            ac.t_c = t_c_;
            ac.reply_payload = reply_payload(n.spec.id);
            const auto& mine = readings[n.spec.id];
            double theta = 0.0;
            if (s_.theta_dbm) {
                theta = *s_.theta_dbm;
            } else {
                int k = 0;
                for (const auto& r : mine)
                    if (r.mu_dbm) {
                        theta += *r.mu_dbm;
                        ++k;
                    }
                theta = k > 0 ? theta / k : 0.0;
            }
            ac.partition = classify_cells(mine, theta);
            n.anchor = std::move(ac);
        }

        MobileConfig mc;
        mc.id = nodes_[mobile_].spec.id;
        mc.group_id = nodes_[mobile_].spec.group_id;
        mc.mode = s_.mode;
        mc.t_c = t_c_;
        mc.t_tx = from_ms(s_.mobile_profile.t_tx);
        mc.rx_window = from_ms(s_.rx_window_ms);
        mobile_machine_.emplace(mc, std::move(ctx));
    }

    Payload reply_payload(int id) const
    {
        return s_.codec ? codec_.encode(id) : raw_id_payload(id, codec_.payload_chips());
    }

    double anchor_harvest_mw(const Node& a, Vec2 p) const
    {
        double mw = 0.0;
        for (double h : a.spec.charger_headings_deg)
            mw += harvested_power_mw(s_.wpt, Charger{a.pos, h}, p, s_.walls);
        return mw;
    }

    Node& node(int id) { return nodes_.at(index_.at(id)); }
    const Node& node(int id) const { return nodes_.at(index_.at(id)); }

    // -- state and ledger -------------------------------------------------

    void set_state(Node& n, PowerState st)
    {
        if (n.profile)
            n.ledger.accumulate(n.state, to_ms(now_ - n.since), *n.profile);
        n.state = st;
        n.since = now_;
        if (st != PowerState::Rx)
            n.lock.reset();
    }

    void close_ledger(Node& n)
    {
        if (n.profile && n.powered)
            n.ledger.accumulate(n.state, to_ms(end_ - n.since), *n.profile);
        n.since = end_;
    }

    // -- rounds -----------------------------------------------------------

    Micros round_time(int r) const { return Micros{static_cast<Micros::rep>(r) * t_m_.count()} + offset_; }

    void schedule_round(int r)
    {
        const Micros lead = s_.mode == Mode::WiPLocPlus ? t_adc_mobile_ : Micros{0};
        queue_.push({round_time(r) - lead, EventKind::Timer, nodes_[mobile_].spec.id, kRoundStart, r});
    }

    void start_round(int r)
    {
        if (round_ >= 0)
            finalize_round();
        round_ = r;
        for (auto& n : nodes_)
            n.resolutions = 0;
        auto& m = nodes_[mobile_];
        m.pos = s_.positions[static_cast<std::size_t>(r / s_.rounds)];
        if (r + 1 < total_rounds())
            schedule_round(r + 1);
        apply(m, mobile_machine_->start_round(r, t_adc_mobile_));
    }

    void finalize_round()
    {
        const auto& rec = mobile_machine_->record();
        RoundTrace t;
        t.round = rec.round;
        t.position = rec.round / s_.rounds;
        t.where = s_.positions[static_cast<std::size_t>(t.position)];
        t.truth = ground_truth(s_, t.where);
        t.xi_dbm = rec.xi_dbm;
        t.no_reply_flag = rec.no_reply_flag;
        t.cell_requested = rec.cell_requested;
        t.room_decodes = rec.room_decodes;
        t.cell_decodes = rec.cell_decodes;
        t.estimate = mobile_machine_->estimate();
        const auto v = judge(t.estimate, t.truth, s_.truth);
        t.reply = v.reply;
        t.correct = v.correct;
        traces_.push_back(std::move(t));
    }

    void schedule_first_adc(Node& n)
    {
        Micros phase;
        if (n.spec.adc_phase_ms) {
            phase = from_ms(*n.spec.adc_phase_ms);
        } else {
            auto rng = make_stream(s_.seed, Stream::AdcPhase, {static_cast<std::uint64_t>(n.spec.id)});
            phase = Micros{static_cast<Micros::rep>(rng() % static_cast<std::uint64_t>(t_c_.count()))};
        }
        // Chargers are already running when the simulation starts.
        n.wpa->prime(adc_reading_dbm(harvest_mw(n.pos)));
        Micros s = phase;
        while (s < t_adc_)
            s += t_c_;
        queue_.push({s - t_adc_, EventKind::AdcStart, n.spec.id, kAdcPeriodic});
    }

    // -- dispatch ---------------------------------------------------------

    void dispatch(const Event& e)
    {
        switch (e.kind) {
        case EventKind::ChargerOff:
            ++node(e.node).chargers_off;
            break;
        case EventKind::ChargerOn:
            --node(e.node).chargers_off;
            break;
        case EventKind::TxStart:
            on_tx_start(e);
            break;
        case EventKind::TxEnd:
            on_tx_end(e);
            break;
        case EventKind::AdcStart:
            on_adc_start(e);
            break;
        case EventKind::AdcSample:
            on_adc_sample(e);
            break;
        case EventKind::Timer:
            on_timer(e);
            break;
        }
    }

    void apply(Node& n, const Actions& actions)
    {
        for (const auto& a : actions) {
            if (const auto* tx = std::get_if<action::Transmit>(&a)) {
                Frame f;
                f.sender = n.spec.id;
                f.packet = tx->packet;
                f.chips = tx->packet.kind == PacketKind::LocationReply
                            ? tx->packet.payload
                            // Control frames share the slot length; their bodies are not spread.
                            : raw_id_payload(0x80 | static_cast<int>(tx->packet.kind), codec_.payload_chips());
                f.tx_power_dbm = n.spec.tx_power_dbm;
                f.start = now_ + tx->delay;
                f.measure_xi = tx->measure_xi;
                frames_.push_back(std::move(f));
                const auto id = static_cast<std::int64_t>(frames_.size() - 1);
                queue_.push({now_ + tx->delay, EventKind::TxStart, n.spec.id, 0, id});
                if (tx->measure_xi) {
                    const Micros t_adc = n.profile ? from_ms(n.profile->t_adc) : t_adc_;
                    queue_.push({std::max(now_, now_ + tx->delay - t_adc), EventKind::AdcStart, n.spec.id,
                                 kAdcBeforeTx, id});
                }
            } else if (const auto* l = std::get_if<action::Listen>(&a)) {
                set_state(n, PowerState::Rx);
                ++n.rx_gen;
                queue_.push({now_ + l->timeout, EventKind::Timer, n.spec.id, kRxDeadline, 0, n.rx_gen});
            } else if (std::holds_alternative<action::Sleep>(a)) {
                set_state(n, PowerState::Wfi);
                ++n.rx_gen;
            } else if (const auto* p = std::get_if<action::PulseCharger>(&a)) {
                queue_.push({now_, EventKind::ChargerOff, n.spec.id});
                queue_.push({now_ + p->duration, EventKind::ChargerOn, n.spec.id});
            }
        }
    }

    void on_tx_start(const Event& e)
    {
        auto& f = frames_.at(static_cast<std::size_t>(e.arg));
        auto& n = node(e.node);
        if (f.measure_xi) {
            const auto xi = adc_reading_dbm(harvest_mw(n.pos));
            f.packet.xi_dbm = xi;
            if (n.spec.role == Role::Mobile)
                mobile_machine_->set_xi(xi);
        }
        set_state(n, PowerState::Tx);
        ++n.rx_gen;
        const double airtime = n.profile ? n.profile->t_tx : s_.mobile_profile.t_tx;
        f.end = now_ + from_ms(airtime);
        queue_.push({f.end, EventKind::TxEnd, n.spec.id, 0, e.arg});

        const Transmission tx{f.sender, f.chips, f.tx_power_dbm, to_ms(f.start), airtime};
        const Micros preamble = from_ms(tx.preamble_window_ms);
        for (auto& r : nodes_) {
            if (r.spec.id == n.spec.id || !r.powered || r.state != PowerState::Rx)
                continue;
            const double p = rx_power_dbm(s_.channel, f.tx_power_dbm, n.pos, r.pos, s_.walls);
            if (p < s_.channel.sensitivity_dbm)
                continue;
            if (!r.lock) {
                r.lock = Lock{now_, f.end, {e.arg}, {Reception{tx, p}}};
            } else if (now_ - r.lock->start <= preamble) {
                r.lock->frames.push_back(e.arg);
                r.lock->receptions.push_back(Reception{tx, p});
                r.lock->end = std::max(r.lock->end, f.end);
            }
        }
    }

    void on_tx_end(const Event& e)
    {
        auto& n = node(e.node);
        switch (n.spec.role) {
        case Role::Anchor:
            set_state(n, PowerState::Rx);
            break;
        case Role::Mobile:
            set_state(n, PowerState::Wfi);
            apply(n, mobile_machine_->on_tx_end());
            break;
        case Role::Wpa:
            apply(n, n.wpa->on_tx_end());
            break;
        }
        for (auto& r : nodes_) {
            if (!r.lock || r.lock->end > now_)
                continue;
            if (std::find(r.lock->frames.begin(), r.lock->frames.end(), e.arg) == r.lock->frames.end())
                continue;
            Lock lock = std::move(*r.lock);
            r.lock.reset();
            deliver(r, lock);
        }
    }

    void deliver(Node& r, const Lock& lock)
    {
        auto rng = make_stream(s_.seed, Stream::Collision,
                               {static_cast<std::uint64_t>(r.spec.id), static_cast<std::uint64_t>(round_),
                                r.resolutions++});
        const auto out = resolve_collision(s_.channel, lock.receptions, rng);
        if (!out)
            return;
        const Frame* clean = nullptr;
        bool any_reply = false;
        for (auto id : lock.frames) {
            const auto& f = frame(id);
            if (out->crc_ok && f.sender == out->contributors.front())
                clean = &f;
            any_reply = any_reply || f.packet.kind == PacketKind::LocationReply;
        }
        switch (r.spec.role) {
        case Role::Anchor:
            if (clean)
                apply(r, anchor_on_packet(*r.anchor, clean->packet, now_));
            break;
        case Role::Wpa:
            if (clean)
                apply(r, r.wpa->on_packet(clean->packet));
            break;
        case Role::Mobile:
            if (any_reply)
                apply(r, mobile_machine_->on_frame(decode_reply(*out)));
            break;
        }
    }

    std::vector<DecodeResult> decode_reply(const ReceptionOutcome& out) const
    {
        const Payload p(out.chips);
        if (s_.codec)
            return codec_.decode(p);
        // Without spreading only an intact frame yields an ID.
        if (!out.crc_ok)
            return {};
        return {{static_cast<int>(p.to_bytes().front()), 0}};
    }

    void on_adc_start(const Event& e)
    {
        auto& n = node(e.node);
        if (e.tag == kAdcBeforeTx) {
            set_state(n, PowerState::Adc);
            return;
        }
        queue_.push({now_ + t_c_, EventKind::AdcStart, n.spec.id, kAdcPeriodic});
        if (n.state != PowerState::Wfi)
            return; // awake: this conversion is skipped
        set_state(n, PowerState::Adc);
        queue_.push({now_ + t_adc_, EventKind::AdcSample, n.spec.id});
    }

    void on_adc_sample(const Event& e)
    {
        auto& n = node(e.node);
        apply(n, n.wpa->on_adc_sample(adc_reading_dbm(harvest_mw(n.pos))));
    }

    void on_timer(const Event& e)
    {
        if (e.tag == kRoundStart) {
            start_round(static_cast<int>(e.arg));
            return;
        }
        auto& n = node(e.node);
        if (e.stamp != n.rx_gen)
            return;
        if (n.lock) {
            // Keep listening until the frame in progress is complete.
            auto again = e;
            again.time = n.lock->end;
            queue_.push(again);
            return;
        }
        if (n.spec.role == Role::Mobile)
            apply(n, mobile_machine_->on_rx_timeout());
        else if (n.wpa)
            apply(n, n.wpa->on_rx_timeout());
    }

    Scenario s_;
    Codec codec_;
    std::vector<Node> nodes_;
    std::map<int, std::size_t> index_;
    std::map<int, int> association_;
    std::size_t mobile_ = 0;
    std::optional<MobileMachine> mobile_machine_;
    std::vector<Frame> frames_;
    EventQueue queue_;
    std::vector<RoundTrace> traces_;
    Observer observer_;
    Micros now_{0};
    Micros end_{0};
    Micros t_m_{0};
    Micros t_c_{0};
    Micros t_adc_{0};
    Micros t_adc_mobile_{0};
    Micros offset_{0};
    int round_ = -1;
    bool ran_ = false;
};

inline RunResult run(const Scenario& s, Simulator::Observer observer = {})
{
    Simulator sim(s);
    if (observer)
        sim.set_observer(std::move(observer));
    return sim.run();
}

} // namespace wiploc::sim

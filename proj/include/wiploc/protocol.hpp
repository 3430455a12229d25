#pragma once

// Node roles and their state machines. Machines never touch the clock or the
// medium directly; they return actions that the simulator carries out.

#include "wiploc/codec.hpp"
#include "wiploc/error.hpp"
#include "wiploc/geometry.hpp"
#include "wiploc/time.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wiploc {

enum class Role { Anchor, Wpa, Mobile };
enum class Mode { WiPLoc, WiPLocPlus };

inline std::string_view to_string(Role r)
{
    switch (r) {
    case Role::Anchor:
        return "anchor";
    case Role::Wpa:
        return "wpa";
    case Role::Mobile:
        return "mobile";
    }
    return "?";
}

inline std::string_view to_string(Mode m)
{
    return m == Mode::WiPLoc ? "wiploc" : "wiploc++";
}

struct NodeSpec {
    int id = 0;
    Role role = Role::Anchor;
    Vec2 position;
    double tx_power_dbm = 4.0;
    int group_id = 1;
    std::vector<double> charger_headings_deg; ///< anchors only; empty = no charger
    std::optional<Rect> cell;                 ///< WPA cell
    std::optional<double> adc_phase_ms;       ///< WPA sampler phase; drawn from the seed if unset
};

enum class PacketKind { LocationRequest, LocationReply, SleepCommand };
enum class RequestTarget { Anchors, Wpas };

struct Packet {
    PacketKind kind = PacketKind::LocationRequest;
    int sender = 0;
    int group_id = 1;
    RequestTarget target = RequestTarget::Anchors;
    std::optional<double> xi_dbm; ///< mobile's harvester reading, filled in at TX time
    bool no_reply = false;
    std::optional<int> previous_estimate;
    std::vector<int> sleep_set; ///< WPA ids told to go back to sleep
    Payload payload;            ///< reply body
};

// ---------------------------------------------------------------------------
// Range classification

struct WpaReading {
    int id = 0;
    std::optional<double> mu_dbm; ///< nullopt: below the harvester floor
};

struct CellPartition {
    double theta_dbm = 0.0;
    std::vector<int> close; ///< mu >= theta
    std::vector<int> far;   ///< mu < theta, including unreadable
};

inline CellPartition classify_cells(std::span<const WpaReading> readings, double theta_dbm)
{
    CellPartition p;
    p.theta_dbm = theta_dbm;
    for (const auto& r : readings)
        (r.mu_dbm && *r.mu_dbm >= theta_dbm ? p.close : p.far).push_back(r.id);
    std::sort(p.close.begin(), p.close.end());
    std::sort(p.far.begin(), p.far.end());
    return p;
}

/// Cells kept awake on a normal request. A weak reading (xi <= theta) puts
/// the mobile far from the charger, so the far cells are tried first.
inline const std::vector<int>& first_choice_awake(const CellPartition& p, std::optional<double> xi_dbm)
{
    const bool weak = !xi_dbm || *xi_dbm <= p.theta_dbm;
    return weak ? p.far : p.close;
}

/// The complementary set, tried after a round without WPA replies.
inline const std::vector<int>& retry_awake(const CellPartition& p, std::optional<double> xi_dbm)
{
    const bool weak = !xi_dbm || *xi_dbm <= p.theta_dbm;
    return weak ? p.close : p.far;
}

// ---------------------------------------------------------------------------
// Location decision

struct LocationContext {
    std::map<int, std::optional<int>> room_of_anchor; ///< deployed anchor id -> room
    std::set<int> wpa_ids;                            ///< deployed WPA id == cell id
};

struct LocationEstimate {
    std::optional<int> anchor;
    std::optional<int> room;
    std::optional<int> cell;
    int round = 0;
};

/// Minimum d_c, then lowest id. Order of the input does not matter.
inline std::optional<DecodeResult> pick_candidate(std::span<const DecodeResult> decoded,
                                                  const std::set<int>* allowed = nullptr)
{
    std::optional<DecodeResult> best;
    for (const auto& d : decoded) {
        if (allowed && !allowed->contains(d.anchor_id))
            continue;
        if (!best || d.distance < best->distance
            || (d.distance == best->distance && d.anchor_id < best->anchor_id))
            best = d;
    }
    return best;
}

inline LocationEstimate decide_location(std::span<const DecodeResult> room_level,
                                        std::span<const DecodeResult> cell_level,
                                        const LocationContext& ctx, int round = 0)
{
    std::set<int> anchors;
    for (const auto& [id, room] : ctx.room_of_anchor)
        anchors.insert(id);
    LocationEstimate est;
    est.round = round;
    if (auto a = pick_candidate(room_level, &anchors)) {
        est.anchor = a->anchor_id;
        est.room = ctx.room_of_anchor.at(a->anchor_id);
    }
    if (auto c = pick_candidate(cell_level, &ctx.wpa_ids))
        est.cell = c->anchor_id;
    return est;
}

// ---------------------------------------------------------------------------
// Actions

namespace action {

/// Start a transmission after `delay`. With measure_xi the node samples its
/// harvester during the t_adc before the frame and stores the reading in it.
struct Transmit {
    Packet packet;
    Micros delay{0};
    bool measure_xi = false;
};

/// Enter (or stay in) RX until now + timeout.
struct Listen {
    Micros timeout{0};
};

struct Sleep {};

/// Switch all of the node's chargers off for `duration`.
struct PulseCharger {
    Micros duration{0};
};

} // namespace action

using Action = std::variant<action::Transmit, action::Listen, action::Sleep, action::PulseCharger>;
using Actions = std::vector<Action>;

// ---------------------------------------------------------------------------
// Anchor

struct AnchorConfig {
    int id = 0;
    int group_id = 1;
    Mode mode = Mode::WiPLoc;
    Micros t_c{10'000};
    Payload reply_payload;
    CellPartition partition; ///< over the WPAs this anchor charges
};

inline Actions anchor_on_packet(const AnchorConfig& cfg, const Packet& p, Micros /*now*/)
{
    if (p.kind != PacketKind::LocationRequest || p.target != RequestTarget::Anchors
        || p.group_id != cfg.group_id)
        return {};
    Actions out;
    Packet reply;
    reply.kind = PacketKind::LocationReply;
    reply.sender = cfg.id;
    reply.group_id = cfg.group_id;
    reply.payload = cfg.reply_payload;
    out.push_back(action::Transmit{std::move(reply)});
    if (cfg.mode != Mode::WiPLocPlus)
        return out;

    // The pulse wakes every WPA; the sleep command then prunes the set that
    // must stay out of this round.
    const auto& awake = p.no_reply ? retry_awake(cfg.partition, p.xi_dbm)
                                   : first_choice_awake(cfg.partition, p.xi_dbm);
    const auto& other = &awake == &cfg.partition.far ? cfg.partition.close : cfg.partition.far;
    Packet sleep;
    sleep.kind = PacketKind::SleepCommand;
    sleep.sender = cfg.id;
    sleep.group_id = cfg.group_id;
    sleep.sleep_set = other;
    out.push_back(action::PulseCharger{cfg.t_c});
    out.push_back(action::Transmit{std::move(sleep), cfg.t_c});
    return out;
}

// ---------------------------------------------------------------------------
// Mobile

struct MobileConfig {
    int id = 0;
    int group_id = 1;
    Mode mode = Mode::WiPLoc;
    Micros t_c{10'000};
    Micros t_tx{800};
    Micros rx_window{2'500}; ///< measured from the start of the request
};

/// What one localization round produced at the mobile.
struct RoundRecord {
    int round = 0;
    bool no_reply_flag = false; ///< the room request carried no-reply
    std::optional<double> xi_dbm;
    std::vector<DecodeResult> room_decodes;
    std::vector<DecodeResult> cell_decodes;
    bool room_replied = false; ///< a frame arrived in the room window
    bool cell_requested = false;
    bool cell_replied = false;
};

class MobileMachine {
  public:
    enum class Phase { Idle, RoomTx, RoomRx, Waiting, CellTx, CellRx };

    MobileMachine(MobileConfig cfg, LocationContext ctx)
        : cfg_(cfg), ctx_(std::move(ctx))
    {
    }

    Phase phase() const noexcept { return phase_; }
    const RoundRecord& record() const noexcept { return record_; }
    bool next_no_reply() const noexcept { return no_reply_next_; }

    /// Begin round `round`; in WiPLoc++ the request goes out after one ADC
    /// conversion, otherwise immediately.
    Actions start_round(int round, Micros t_adc)
    {
        record_ = RoundRecord{};
        record_.round = round;
        record_.no_reply_flag = cfg_.mode == Mode::WiPLocPlus && no_reply_next_;
        Packet req;
        req.kind = PacketKind::LocationRequest;
        req.sender = cfg_.id;
        req.group_id = cfg_.group_id;
        req.target = RequestTarget::Anchors;
        req.no_reply = record_.no_reply_flag;
        req.previous_estimate = previous_;
        phase_ = Phase::RoomTx;
        if (cfg_.mode == Mode::WiPLocPlus)
            return {action::Transmit{std::move(req), t_adc, true}};
        return {action::Transmit{std::move(req)}};
    }

    /// The simulator reports the reading taken for the frame just sent.
    void set_xi(std::optional<double> xi)
    {
        if (phase_ == Phase::RoomTx)
            record_.xi_dbm = xi;
    }

    Actions on_tx_end()
    {
        if (phase_ == Phase::RoomTx)
            phase_ = Phase::RoomRx;
        else if (phase_ == Phase::CellTx)
            phase_ = Phase::CellRx;
        else
            return {};
        return {action::Listen{cfg_.rx_window - cfg_.t_tx}};
    }

    /// A frame group ended while listening; `decoded` is what the codec made of it.
    Actions on_frame(std::vector<DecodeResult> decoded)
    {
        if (phase_ == Phase::RoomRx) {
            record_.room_replied = true;
            record_.room_decodes = std::move(decoded);
            return finish_room();
        }
        if (phase_ == Phase::CellRx) {
            record_.cell_replied = true;
            record_.cell_decodes = std::move(decoded);
            return finish_cell();
        }
        return {};
    }

    Actions on_rx_timeout()
    {
        if (phase_ == Phase::RoomRx)
            return finish_room();
        if (phase_ == Phase::CellRx)
            return finish_cell();
        return {};
    }

    LocationEstimate estimate() const
    {
        return decide_location(record_.room_decodes, record_.cell_decodes, ctx_, record_.round);
    }

  private:
    Actions finish_room()
    {
        const auto est = estimate();
        if (cfg_.mode != Mode::WiPLocPlus || !est.anchor) {
            phase_ = Phase::Idle;
            previous_ = est.room;
            return {action::Sleep{}};
        }
        // Wait t_c after the reply so every WPA has seen the pulse.
        Packet req;
        req.kind = PacketKind::LocationRequest;
        req.sender = cfg_.id;
        req.group_id = cfg_.group_id;
        req.target = RequestTarget::Wpas;
        req.xi_dbm = record_.xi_dbm;
        record_.cell_requested = true;
        phase_ = Phase::CellTx;
        return {action::Sleep{}, action::Transmit{std::move(req), cfg_.t_c, true}};
    }

    Actions finish_cell()
    {
        const auto est = estimate();
        // A failed retry does not trigger another retry.
        no_reply_next_ = !est.cell && !record_.no_reply_flag;
        phase_ = Phase::Idle;
        previous_ = est.cell ? est.cell : est.room;
        return {action::Sleep{}};
    }

    MobileConfig cfg_;
    LocationContext ctx_;
    Phase phase_ = Phase::Idle;
    RoundRecord record_;
    bool no_reply_next_ = false;
    std::optional<int> previous_;
};

// ---------------------------------------------------------------------------
// Wirelessly powered anchor

struct WpaConfig {
    int id = 0;
    int group_id = 1;
    Micros t_c{10'000};
    Payload reply_payload;
    double edge_db = 1.0; ///< drop between samples that counts as a wake-up signal
};

class WpaMachine {
  public:
    explicit WpaMachine(WpaConfig cfg)
        : cfg_(std::move(cfg))
    {
    }

    bool awake() const noexcept { return awake_; }
    int replies() const noexcept { return replies_; }

    /// Reference reading from before the first conversion, so a pulse that
    /// lands on the very first sample still shows up as an edge.
    void prime(std::optional<double> reading_dbm)
    {
        previous_ = reading_dbm;
        has_previous_ = true;
    }

    /// End of an ADC conversion. A falling edge opens an RX window of t_c.
    Actions on_adc_sample(std::optional<double> reading_dbm)
    {
        const bool edge = has_previous_ && previous_
                       && (!reading_dbm || *reading_dbm < *previous_ - cfg_.edge_db);
        previous_ = reading_dbm;
        has_previous_ = true;
        if (!edge)
            return {action::Sleep{}};
        awake_ = true;
        return {action::Listen{cfg_.t_c}};
    }

    Actions on_packet(const Packet& p)
    {
        if (!awake_ || p.group_id != cfg_.group_id)
            return {};
        if (p.kind == PacketKind::SleepCommand) {
            if (std::find(p.sleep_set.begin(), p.sleep_set.end(), cfg_.id) != p.sleep_set.end()) {
                awake_ = false;
                return {action::Sleep{}};
            }
            return {action::Listen{cfg_.t_c}};
        }
        if (p.kind == PacketKind::LocationRequest && p.target == RequestTarget::Wpas) {
            Packet reply;
            reply.kind = PacketKind::LocationReply;
            reply.sender = cfg_.id;
            reply.group_id = cfg_.group_id;
            reply.payload = cfg_.reply_payload;
            ++replies_;
            return {action::Transmit{std::move(reply)}};
        }
        return {};
    }

    Actions on_rx_timeout()
    {
        awake_ = false;
        return {action::Sleep{}};
    }

    Actions on_tx_end()
    {
        awake_ = false;
        return {action::Sleep{}};
    }

  private:
    WpaConfig cfg_;
    bool awake_ = false;
    bool has_previous_ = false;
    std::optional<double> previous_;
    int replies_ = 0;
};

} // namespace wiploc

#pragma once

#include "wiploc/time.hpp"

#include <cstdint>
#include <queue>
#include <vector>

namespace wiploc::sim {

enum class EventKind {
    ChargerOff,
    ChargerOn,
    TxEnd,
    TxStart,
    AdcStart,
    AdcSample,
    Timer,
};

/// Order among simultaneous events: charger, tx-end, tx-start, adc, timer.
inline int priority(EventKind k)
{
    switch (k) {
    case EventKind::ChargerOff:
    case EventKind::ChargerOn:
        return 0;
    case EventKind::TxEnd:
        return 1;
    case EventKind::TxStart:
        return 2;
    case EventKind::AdcStart:
    case EventKind::AdcSample:
        return 3;
    case EventKind::Timer:
        return 4;
    }
    return 5;
}

struct Event {
    Micros time{0};
    EventKind kind = EventKind::Timer;
    int node = 0;
    int tag = 0;              ///< timer purpose / ADC purpose
    std::int64_t arg = 0;     ///< frame id or round index
    std::uint64_t stamp = 0;  ///< generation check for cancellable timers
    std::uint64_t seq = 0;    ///< insertion order, last tie-breaker
};

/// Min-queue over (time, kind priority, node id, insertion sequence).
class EventQueue {
  public:
    void push(Event e)
    {
        e.seq = next_seq_++;
        heap_.push(e);
    }

    bool empty() const { return heap_.empty(); }
    const Event& top() const { return heap_.top(); }

    Event pop()
    {
        Event e = heap_.top();
        heap_.pop();
        return e;
    }

    std::size_t size() const { return heap_.size(); }

  private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const
        {
            if (a.time != b.time)
                return a.time > b.time;
            if (priority(a.kind) != priority(b.kind))
                return priority(a.kind) > priority(b.kind);
            if (a.node != b.node)
                return a.node > b.node;
            return a.seq > b.seq;
        }
    };

    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

} // namespace wiploc::sim

// Two anchors reply to one request at the same time. Their frames collide at
// the mobile, and the spreading codes still let it pull both IDs apart.

#include "wiploc/wiploc.hpp"

#include <cstdio>
#include <vector>

using namespace wiploc;

int main()
{
    const Codec codec;
    const ChannelModel channel;
    const std::vector<Segment> walls;
    const Vec2 mobile{1.0, 0.0};
    const Vec2 anchors[] = {{0.0, 0.0}, {2.0, 0.0}};

    std::vector<Reception> rx;
    for (int id = 0; id < 2; ++id) {
        Transmission tx{id, codec.encode(id), 0.0, 0.0};
        rx.push_back({tx, rx_power_dbm(channel, 0.0, anchors[id], mobile, walls)});
        std::printf("anchor %d: %s at %.1f dBm\n", id, tx.payload.to_hex().c_str(), rx.back().rx_power_dbm);
    }

    Rng rng(2024);
    const auto out = resolve_collision(channel, rx, rng);
    std::printf("received: %s (crc %s)\n", Payload(out->chips).to_hex().c_str(), out->crc_ok ? "ok" : "bad");
    for (const auto& d : codec.decode(Payload(out->chips)))
        std::printf("  decoded id %d, d_c %d\n", d.anchor_id, d.distance);

    const double tc = optimal_tc(PowerProfile::wpa(), 1000.0);
    std::printf("optimal ADC period %.2f ms, WPA average %.3f mW\n", tc,
                wpa_average_power({1000.0, tc}, PowerProfile::wpa()));
    return 0;
}

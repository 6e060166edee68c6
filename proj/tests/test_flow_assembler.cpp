#include "doctest.h"

#include <sstream>

#include "nids/flow_assembler.hpp"
#include "nids/packet_io.hpp"
#include "nids/session_log.hpp"
#include "support.hpp"

using namespace nids;

namespace {

const char* kClient = "10.0.0.5";
const char* kServer = "93.184.216.34";

PacketEvent tcp(std::int64_t ts_us, bool from_client, std::uint8_t flags, std::uint32_t payload = 0) {
    PacketEvent e;
    e.ts_us = ts_us;
    e.five_tuple = {IpAddress::parse(kClient), 40000, IpAddress::parse(kServer), 80, Protocol::TCP};
    if (!from_client) e.five_tuple = e.five_tuple.reversed();
    e.tcp_flags = flags;
    e.payload_len = payload;
    e.wire_len = 40 + payload;
    return e;
}

PacketEvent udp(std::int64_t ts_us, bool from_client, std::uint32_t payload) {
    PacketEvent e;
    e.ts_us = ts_us;
    e.five_tuple = {IpAddress::parse(kClient), 53000, IpAddress::parse("10.0.0.53"), 53, Protocol::UDP};
    if (!from_client) e.five_tuple = e.five_tuple.reversed();
    e.payload_len = payload;
    e.wire_len = 28 + payload;
    return e;
}

// Handshake, one request, orderly close both ways, plus a DNS exchange.
std::vector<PacketEvent> eight_packets() {
    return {
        tcp(1000000, true, kSyn),
        tcp(1001000, false, kSyn | kAck),
        tcp(1002000, true, kAck, 100),
        udp(1002500, true, 40),
        udp(1003500, false, 120),
        tcp(1004000, true, kFin | kAck),
        tcp(1005000, false, kFin | kAck, 500),
        tcp(1006000, true, kAck),
    };
}

std::vector<std::uint8_t> pcap_global_header(std::uint32_t magic = 0xA1B2C3D4) {
    std::vector<std::uint8_t> b;
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    auto u16 = [&](std::uint16_t v) {
        b.push_back(static_cast<std::uint8_t>(v));
        b.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    u32(magic);
    u16(2);
    u16(4);
    u32(0);
    u32(0);
    u32(65535);
    u32(1);
    return b;
}

void append_record(std::vector<std::uint8_t>& b, std::uint32_t sec, std::uint32_t usec,
                   const std::vector<std::uint8_t>& frame) {
    auto u32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    u32(sec);
    u32(usec);
    u32(static_cast<std::uint32_t>(frame.size()));
    u32(static_cast<std::uint32_t>(frame.size()));
    b.insert(b.end(), frame.begin(), frame.end());
}

// 74-byte Ethernet/IPv4/TCP SYN with 20 bytes of TCP options.
std::vector<std::uint8_t> syn_frame() {
    std::vector<std::uint8_t> f = {
        // ethernet
        0x00, 0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99, 0xaa, 0xbb, 0x08, 0x00,
        // ipv4, total length 60, proto 6
        0x45, 0x00, 0x00, 0x3c, 0x12, 0x34, 0x40, 0x00, 0x40, 0x06, 0x00, 0x00,
        10, 0, 0, 5, 93, 184, 216, 34,
        // tcp 40000 -> 80, data offset 10 words, SYN
        0x9c, 0x40, 0x00, 0x50, 0, 0, 0, 1, 0, 0, 0, 0, 0xa0, 0x02, 0xff, 0xff, 0, 0, 0, 0,
        // options
        0x02, 0x04, 0x05, 0xb4, 0x04, 0x02, 0x08, 0x0a, 0, 0, 0, 1, 0, 0, 0, 0, 0x01, 0x03, 0x03, 0x07};
    return f;
}

}  // namespace

TEST_SUITE("flow_assembler") {

TEST_CASE("hand-built SYN frame") {
    auto bytes = pcap_global_header();
    const auto frame = syn_frame();
    REQUIRE(frame.size() == 74);
    append_record(bytes, 1421884800, 250, frame);
    const auto res = read_pcap(bytes);
    REQUIRE(res.events.size() == 1);
    const auto& e = res.events[0];
    CHECK(e.tcp_flags == std::optional<std::uint8_t>(kSyn));
    CHECK(e.payload_len == 0);
    CHECK(e.wire_len == 60);
    CHECK(e.ts_us == 1421884800000250);
    CHECK(e.five_tuple.src_addr == IpAddress::parse("10.0.0.5"));
    CHECK(e.five_tuple.dst_port == 80);
    CHECK_FALSE(res.truncated);
}

TEST_CASE("empty capture and non-IP frames") {
    auto bytes = pcap_global_header();
    CHECK(read_pcap(bytes).events.empty());

    std::vector<std::uint8_t> arp(42, 0);
    arp[12] = 0x08;
    arp[13] = 0x06;
    append_record(bytes, 1, 0, arp);
    const auto res = read_pcap(bytes);
    CHECK(res.events.empty());
    CHECK(res.skipped == 1);
}

TEST_CASE("byte-swapped and nanosecond headers") {
    const auto frame = syn_frame();
    // nanosecond magic, little-endian
    auto ns = pcap_global_header(0xA1B23C4D);
    append_record(ns, 10, 5000, frame);
    auto res = read_pcap(ns);
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].ts_us == 10000005);

    // big-endian file
    std::vector<std::uint8_t> be = {0xa1, 0xb2, 0xc3, 0xd4, 0, 2, 0, 4, 0, 0, 0, 0, 0, 0, 0, 0,
                                    0, 0, 0xff, 0xff, 0, 0, 0, 1};
    auto u32be = [&](std::uint32_t v) {
        for (int i = 3; i >= 0; --i) be.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    };
    u32be(7);
    u32be(3);
    u32be(74);
    u32be(74);
    be.insert(be.end(), frame.begin(), frame.end());
    res = read_pcap(be);
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].ts_us == 7000003);
}

TEST_CASE("truncated input") {
    auto bytes = pcap_global_header();
    CHECK_THROWS_AS(read_pcap(std::span(bytes.data(), 10)), ParseError);
    append_record(bytes, 1, 0, syn_frame());
    append_record(bytes, 2, 0, syn_frame());
    bytes.resize(bytes.size() - 5);
    const auto res = read_pcap(bytes);
    CHECK(res.events.size() == 1);
    CHECK(res.truncated);
}

TEST_CASE("vlan tag is unwrapped") {
    auto frame = syn_frame();
    frame.insert(frame.begin() + 12, {0x81, 0x00, 0x00, 0x64});
    auto bytes = pcap_global_header();
    append_record(bytes, 1, 0, frame);
    const auto res = read_pcap(bytes);
    REQUIRE(res.events.size() == 1);
    CHECK(res.events[0].wire_len == 60);
}

TEST_CASE("eight crafted packets give two sessions") {
    AssemblerStats stats;
    const auto sessions = assemble(eight_packets(), AssemblerConfig{}, &stats);
    REQUIRE(sessions.size() == 2);

    const SessionRecord& t = sessions[0];
    CHECK(t.five_tuple.protocol == Protocol::TCP);
    CHECK(t.conn_state == ConnState::SF);
    CHECK(t.five_tuple.src_addr == IpAddress::parse(kClient));
    CHECK(t.five_tuple.dst_port == 80);
    CHECK(t.src_packets == 4);
    CHECK(t.dst_packets == 2);
    CHECK(t.src_bytes == 100);
    CHECK(t.dst_bytes == 500);
    CHECK(t.src_ip_bytes == 4 * 40 + 100);
    CHECK(t.dst_ip_bytes == 2 * 40 + 500);
    CHECK(t.timestamp_ms == 1000);
    CHECK(t.duration_s == doctest::Approx(0.006));
    CHECK(t.service == ServiceType::http());
    CHECK(t.direction == Direction::L2R);

    const SessionRecord& u = sessions[1];
    CHECK(u.five_tuple.protocol == Protocol::UDP);
    CHECK(u.conn_state == ConnState::SF);
    CHECK(u.src_packets == 1);
    CHECK(u.dst_packets == 1);
    CHECK(u.duration_s == doctest::Approx(0.001));
    CHECK(u.service == ServiceType::dns());
    CHECK(u.direction == Direction::L2L);

    CHECK(stats.accepted_packets == 8);
    CHECK(stats.by_reason[TerminationReason::Fin] == 1);
}

TEST_CASE("unanswered SYN evicted by inactivity") {
    FlowAssembler fa{AssemblerConfig{}};
    CHECK(fa.advance(tcp(0, true, kSyn)).empty());
    PacketEvent later = udp(400'000'000, true, 10);
    const auto out = fa.advance(later);
    REQUIRE(out.size() == 1);
    CHECK(out[0].conn_state == ConnState::S0);
    CHECK(out[0].dst_packets == 0);
    CHECK(out[0].dst_bytes == 0);
    CHECK(fa.stats().by_reason.at(TerminationReason::Timeout) == 1);
}

TEST_CASE("other TCP outcomes") {
    auto state_of = [](std::vector<PacketEvent> pkts) {
        const auto s = assemble(pkts, AssemblerConfig{});
        REQUIRE(s.size() == 1);
        return s[0].conn_state;
    };
    CHECK(state_of({tcp(0, true, kSyn), tcp(10, false, kRst | kAck)}) == ConnState::REJ);
    CHECK(state_of({tcp(0, true, kSyn), tcp(10, false, kSyn | kAck), tcp(20, true, kAck)}) == ConnState::S1);
    CHECK(state_of({tcp(0, true, kSyn), tcp(10, false, kSyn | kAck), tcp(20, true, kRst)}) == ConnState::RSTO);
    CHECK(state_of({tcp(0, true, kSyn), tcp(10, false, kSyn | kAck), tcp(20, false, kRst)}) == ConnState::RSTR);
    CHECK(state_of({tcp(0, true, kAck, 10), tcp(10, false, kAck, 10)}) == ConnState::OTH);
}

TEST_CASE("udp request and reply") {
    const auto s = assemble(std::vector{udp(5'000'000, true, 10), udp(5'250'000, false, 20)}, AssemblerConfig{});
    REQUIRE(s.size() == 1);
    CHECK(s[0].conn_state == ConnState::SF);
    CHECK(s[0].duration_s == doctest::Approx(0.25));
}

TEST_CASE("flush_all order and emptiness") {
    FlowAssembler empty{AssemblerConfig{}};
    CHECK(empty.flush_all(0).empty());

    FlowAssembler fa{AssemblerConfig{}};
    fa.advance(udp(2'000'000, true, 10));
    fa.advance(tcp(2'500'000, true, kSyn));
    const auto out = fa.flush_all(3'000'000);
    REQUIRE(out.size() == 2);
    CHECK(out[0].timestamp_ms <= out[1].timestamp_ms);
    CHECK(fa.open_flows() == 0);
    CHECK(fa.stats().by_reason.at(TerminationReason::Eof) == 2);
}

TEST_CASE("out-of-order packets beyond tolerance are rejected") {
    FlowAssembler fa{AssemblerConfig{}};
    fa.advance(udp(10'000'000, true, 10));
    fa.advance(udp(9'500'000, false, 10));  // within 1 s
    fa.advance(udp(5'000'000, false, 10));  // rejected
    CHECK(fa.stats().out_of_order_rejected == 1);
    CHECK(fa.stats().accepted_packets == 2);
}

TEST_CASE("pcap and jsonl inputs assemble identically") {
    const auto pkts = eight_packets();
    const auto pcap = write_pcap(pkts);
    const auto from_pcap = read_pcap(pcap);
    std::stringstream jsonl;
    for (const auto& p : pkts) jsonl << to_jsonl_line(p) << '\n';
    const auto from_jsonl = read_packets_jsonl(jsonl);
    CHECK(from_pcap.events == from_jsonl.events);
    CHECK(assemble(from_pcap.events, AssemblerConfig{}) == assemble(from_jsonl.events, AssemblerConfig{}));
}

TEST_CASE("random captures: conservation, symmetry, ordering") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<PacketEvent> pkts;
        std::int64_t ts = 0;
        const std::uint8_t flag_choices[] = {kSyn, kSyn | kAck, kAck, kFin | kAck, kRst, kAck};
        for (int i = 0; i < 400; ++i) {
            ts += static_cast<std::int64_t>(uniform_index(rng, 3'000'000));
            PacketEvent e;
            e.ts_us = ts;
            const auto proto = kAllProtocols[uniform_index(rng, 3)];
            e.five_tuple.protocol = proto;
            e.five_tuple.src_addr = IpAddress::v4(0x0A000000u + static_cast<std::uint32_t>(uniform_index(rng, 4)));
            e.five_tuple.dst_addr = IpAddress::v4(0x0A000100u + static_cast<std::uint32_t>(uniform_index(rng, 4)));
            e.payload_len = static_cast<std::uint32_t>(uniform_index(rng, 200));
            if (proto == Protocol::ICMP) {
                e.icmp_type_code = std::pair<std::uint8_t, std::uint8_t>{8, 0};
                e.wire_len = 28 + e.payload_len;
            } else {
                e.five_tuple.src_port = static_cast<std::uint16_t>(1000 + uniform_index(rng, 3));
                e.five_tuple.dst_port = static_cast<std::uint16_t>(1000 + uniform_index(rng, 3));
                if (proto == Protocol::TCP) {
                    e.tcp_flags = flag_choices[uniform_index(rng, 6)];
                    e.wire_len = 40 + e.payload_len;
                } else {
                    e.wire_len = 28 + e.payload_len;
                }
            }
            pkts.push_back(e);
        }
        AssemblerStats stats;
        const auto sessions = assemble(pkts, AssemblerConfig{}, &stats);
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < sessions.size(); ++i) {
            total += sessions[i].src_packets + sessions[i].dst_packets;
            if (i > 0) CHECK(sessions[i - 1].timestamp_ms <= sessions[i].timestamp_ms);
            if (sessions[i].conn_state == ConnState::SF) {
                CHECK(sessions[i].src_packets >= 1);
                CHECK(sessions[i].dst_packets >= 1);
            }
            CHECK(sessions[i].src_ip_bytes >= sessions[i].src_bytes);
            CHECK(sessions[i].dst_ip_bytes >= sessions[i].dst_bytes);
        }
        CHECK(total == stats.accepted_packets);

        auto swapped = pkts;
        for (auto& p : swapped) p.five_tuple = p.five_tuple.reversed();
        CHECK(assemble(swapped, AssemblerConfig{}).size() == sessions.size());
    }
}

TEST_CASE("flow key is direction-free") {
    const FiveTuple t{IpAddress::parse("10.0.0.1"), 1234, IpAddress::parse("10.0.0.2"), 80, Protocol::TCP};
    CHECK(FlowKey::of(t) == FlowKey::of(t.reversed()));
}

TEST_CASE("bad configuration") {
    AssemblerConfig c;
    c.udp_inactivity_timeout_s = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    AssemblerConfig d;
    d.local_prefixes = {"10.0.0.0/99"};
    CHECK_THROWS_AS(d.validate(), ConfigError);
}

}  // TEST_SUITE

#pragma once

// Packet-level input: classic pcap (Ethernet link type) and packet-event JSONL.

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nids/core_model.hpp"

namespace nids {

/// TCP flag bits, numbered as in the TCP header.
enum TcpFlag : std::uint8_t {
    kFin = 0x01,
    kSyn = 0x02,
    kRst = 0x04,
    kAck = 0x10,
};

struct PacketEvent {
    std::int64_t ts_us = 0;
    FiveTuple five_tuple;                 // as observed on the wire
    std::optional<std::uint8_t> tcp_flags;  // present iff protocol is TCP
    std::uint32_t payload_len = 0;
    std::uint32_t wire_len = 0;           // IP total length
    std::optional<std::pair<std::uint8_t, std::uint8_t>> icmp_type_code;

    bool has(TcpFlag f) const { return tcp_flags && (*tcp_flags & f) != 0; }
    bool operator==(const PacketEvent&) const = default;
};

struct PacketReadResult {
    std::vector<PacketEvent> events;
    std::size_t frames = 0;   // records seen in the input
    std::size_t skipped = 0;  // non-IPv4, unsupported transport, or short frames
    bool truncated = false;   // a trailing record was cut short
    std::string warning;
};

/// Parses a classic pcap image. Throws ParseError on a missing or
/// malformed global header or a non-Ethernet link type.
PacketReadResult read_pcap(std::span<const std::uint8_t> bytes);
PacketReadResult read_pcap_file(const std::string& path);

/// One JSON object per line: ts_us, src, sport, dst, dport, proto, flags,
/// payload_len, wire_len (plus optional icmp_type, icmp_code). flags is a
/// string over the letters S, A, F, R. Throws ParseError with the line number.
PacketReadResult read_packets_jsonl(std::istream& in);

std::string to_jsonl_line(const PacketEvent& e);

/// Writes a microsecond little-endian pcap with synthetic Ethernet/IPv4
/// framing. Requires wire_len to equal the header bytes plus payload_len.
std::vector<std::uint8_t> write_pcap(std::span<const PacketEvent> events);

std::string flags_to_string(std::uint8_t flags);
std::optional<std::uint8_t> flags_from_string(std::string_view text);

}  // namespace nids

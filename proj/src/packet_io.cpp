#include "nids/packet_io.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

namespace nids {

namespace {

constexpr std::uint32_t kMagicMicro = 0xA1B2C3D4;
constexpr std::uint32_t kMagicNano = 0xA1B23C4D;
constexpr std::uint32_t kLinkEthernet = 1;
constexpr std::size_t kGlobalHeaderLen = 24;
constexpr std::size_t kRecordHeaderLen = 16;

std::uint32_t bswap32(std::uint32_t v) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

std::uint32_t load_le32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

std::uint16_t load_be16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}

std::uint32_t load_be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_le16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_be16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Decodes one Ethernet frame into a packet event. nullopt means "skip".
std::optional<PacketEvent> decode_frame(const std::uint8_t* p, std::size_t len, std::int64_t ts_us) {
    if (len < 14) return std::nullopt;
    std::size_t off = 12;
    std::uint16_t ethertype = load_be16(p + off);
    off += 2;
    if (ethertype == 0x8100) {  // one VLAN tag
        if (len < off + 4) return std::nullopt;
        ethertype = load_be16(p + off + 2);
        off += 4;
    }
    if (ethertype != 0x0800) return std::nullopt;

    const std::uint8_t* ip = p + off;
    const std::size_t ip_avail = len - off;
    if (ip_avail < 20 || (ip[0] >> 4) != 4) return std::nullopt;
    const std::size_t ihl = std::size_t{ip[0] & 0x0Fu} * 4;
    const std::uint16_t total_len = load_be16(ip + 2);
    if (ihl < 20 || total_len < ihl || ip_avail < ihl) return std::nullopt;

    const std::uint16_t frag = load_be16(ip + 6);
    const bool later_fragment = (frag & 0x1FFF) != 0;

    PacketEvent ev;
    ev.ts_us = ts_us;
    ev.wire_len = total_len;
    ev.five_tuple.src_addr = IpAddress::v4(load_be32(ip + 12));
    ev.five_tuple.dst_addr = IpAddress::v4(load_be32(ip + 16));

    const std::uint8_t proto = ip[9];
    switch (proto) {
        case 6: ev.five_tuple.protocol = Protocol::TCP; break;
        case 17: ev.five_tuple.protocol = Protocol::UDP; break;
        case 1: ev.five_tuple.protocol = Protocol::ICMP; break;
        default: return std::nullopt;
    }

    if (later_fragment) {
        // No transport header: account it on a port-less synthetic key.
        ev.payload_len = total_len - static_cast<std::uint32_t>(ihl);
        if (ev.five_tuple.protocol == Protocol::TCP) ev.tcp_flags = 0;
        return ev;
    }

    const std::uint8_t* l4 = ip + ihl;
    const std::size_t l4_avail = ip_avail - ihl;
    const std::size_t l4_len = total_len - ihl;
    switch (ev.five_tuple.protocol) {
        case Protocol::TCP: {
            if (l4_avail < 20) return std::nullopt;
            const std::size_t doff = std::size_t{static_cast<std::uint8_t>(l4[12] >> 4)} * 4;
            if (doff < 20 || doff > l4_len) return std::nullopt;
            ev.five_tuple.src_port = load_be16(l4);
            ev.five_tuple.dst_port = load_be16(l4 + 2);
            ev.tcp_flags = static_cast<std::uint8_t>(l4[13] & (kFin | kSyn | kRst | kAck));
            ev.payload_len = static_cast<std::uint32_t>(l4_len - doff);
            break;
        }
        case Protocol::UDP: {
            if (l4_avail < 8 || l4_len < 8) return std::nullopt;
            ev.five_tuple.src_port = load_be16(l4);
            ev.five_tuple.dst_port = load_be16(l4 + 2);
            ev.payload_len = static_cast<std::uint32_t>(l4_len - 8);
            break;
        }
        case Protocol::ICMP: {
            if (l4_avail < 8 || l4_len < 8) return std::nullopt;
            ev.icmp_type_code = std::make_pair(l4[0], l4[1]);
            ev.payload_len = static_cast<std::uint32_t>(l4_len - 8);
            break;
        }
    }
    return ev;
}

}  // namespace

PacketReadResult read_pcap(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kGlobalHeaderLen) throw ParseError("pcap: truncated global header");

    const std::uint32_t raw_magic = load_le32(bytes.data());
    bool swapped = false;
    bool nano = false;
    if (raw_magic == kMagicMicro || raw_magic == kMagicNano) {
        nano = raw_magic == kMagicNano;
    } else if (bswap32(raw_magic) == kMagicMicro || bswap32(raw_magic) == kMagicNano) {
        swapped = true;
        nano = bswap32(raw_magic) == kMagicNano;
    } else {
        throw ParseError("pcap: bad magic number");
    }
    auto u32 = [swapped](const std::uint8_t* p) {
        const std::uint32_t v = load_le32(p);
        return swapped ? bswap32(v) : v;
    };
    const std::uint32_t linktype = u32(bytes.data() + 20) & 0x0FFFFFFFu;
    if (linktype != kLinkEthernet) {
        throw ParseError("pcap: unsupported link type " + std::to_string(linktype));
    }

    PacketReadResult result;
    std::size_t off = kGlobalHeaderLen;
    while (off < bytes.size()) {
        if (bytes.size() - off < kRecordHeaderLen) {
            result.truncated = true;
            result.warning = "pcap: truncated record header at offset " + std::to_string(off);
            break;
        }
        const std::uint8_t* rec = bytes.data() + off;
        const std::int64_t sec = u32(rec);
        const std::int64_t frac = u32(rec + 4);
        const std::uint32_t incl_len = u32(rec + 8);
        off += kRecordHeaderLen;
        if (bytes.size() - off < incl_len) {
            result.truncated = true;
            result.warning = "pcap: truncated packet data at offset " + std::to_string(off);
            break;
        }
        ++result.frames;
        const std::int64_t ts_us = sec * 1'000'000 + (nano ? frac / 1000 : frac);
        if (auto ev = decode_frame(bytes.data() + off, incl_len, ts_us)) {
            result.events.push_back(std::move(*ev));
        } else {
            ++result.skipped;
        }
        off += incl_len;
    }
    return result;
}

PacketReadResult read_pcap_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open capture '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return read_pcap(bytes);
}

std::string flags_to_string(std::uint8_t flags) {
    std::string s;
    if (flags & kSyn) s += 'S';
    if (flags & kAck) s += 'A';
    if (flags & kFin) s += 'F';
    if (flags & kRst) s += 'R';
    return s;
}

std::optional<std::uint8_t> flags_from_string(std::string_view text) {
    std::uint8_t f = 0;
    for (char c : text) {
        switch (c) {
            case 'S': case 's': f |= kSyn; break;
            case 'A': case 'a': f |= kAck; break;
            case 'F': case 'f': f |= kFin; break;
            case 'R': case 'r': f |= kRst; break;
            case '.': case '-': break;
            default: return std::nullopt;
        }
    }
    return f;
}

PacketReadResult read_packets_jsonl(std::istream& in) {
    PacketReadResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++result.frames;
        auto fail = [&](const std::string& why) {
            return ParseError("packets jsonl line " + std::to_string(lineno) + ": " + why);
        };
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
        try {
            PacketEvent ev;
            ev.ts_us = j.at("ts_us").get<std::int64_t>();
            const auto proto = parse_protocol(j.at("proto").get<std::string>());
            if (!proto) throw fail("unknown proto");
            ev.five_tuple.protocol = *proto;
            auto src = IpAddress::try_parse(j.at("src").get<std::string>());
            auto dst = IpAddress::try_parse(j.at("dst").get<std::string>());
            if (!src || !dst) throw fail("malformed address");
            ev.five_tuple.src_addr = *src;
            ev.five_tuple.dst_addr = *dst;
            if (*proto != Protocol::ICMP) {
                ev.five_tuple.src_port = j.value("sport", std::uint16_t{0});
                ev.five_tuple.dst_port = j.value("dport", std::uint16_t{0});
            }
            if (*proto == Protocol::TCP) {
                auto flags = flags_from_string(j.value("flags", std::string{}));
                if (!flags) throw fail("bad flags");
                ev.tcp_flags = *flags;
            }
            if (*proto == Protocol::ICMP && j.contains("icmp_type")) {
                ev.icmp_type_code = std::make_pair(j.at("icmp_type").get<std::uint8_t>(),
                                                   j.value("icmp_code", std::uint8_t{0}));
            }
            ev.payload_len = j.at("payload_len").get<std::uint32_t>();
            ev.wire_len = j.at("wire_len").get<std::uint32_t>();
            if (ev.wire_len < ev.payload_len) throw fail("wire_len below payload_len");
            result.events.push_back(std::move(ev));
        } catch (const nlohmann::json::exception& e) {
            throw fail(e.what());
        }
    }
    return result;
}

std::string to_jsonl_line(const PacketEvent& e) {
    nlohmann::ordered_json j;
    j["ts_us"] = e.ts_us;
    j["src"] = e.five_tuple.src_addr.to_string();
    j["sport"] = e.five_tuple.src_port;
    j["dst"] = e.five_tuple.dst_addr.to_string();
    j["dport"] = e.five_tuple.dst_port;
    j["proto"] = std::string(to_string(e.five_tuple.protocol));
    j["flags"] = e.tcp_flags ? flags_to_string(*e.tcp_flags) : std::string{};
    j["payload_len"] = e.payload_len;
    j["wire_len"] = e.wire_len;
    if (e.icmp_type_code) {
        j["icmp_type"] = e.icmp_type_code->first;
        j["icmp_code"] = e.icmp_type_code->second;
    }
    return j.dump();
}

std::vector<std::uint8_t> write_pcap(std::span<const PacketEvent> events) {
    std::vector<std::uint8_t> out;
    put_le32(out, kMagicMicro);
    put_le16(out, 2);
    put_le16(out, 4);
    put_le32(out, 0);
    put_le32(out, 0);
    put_le32(out, 65535);
    put_le32(out, kLinkEthernet);

    for (const auto& e : events) {
        if (!e.five_tuple.src_addr.is_v4() || !e.five_tuple.dst_addr.is_v4()) {
            throw Error("write_pcap: only IPv4 events can be framed");
        }
        const std::uint32_t l4_hdr = e.five_tuple.protocol == Protocol::TCP ? 20 : 8;
        if (e.wire_len != 20 + l4_hdr + e.payload_len) {
            throw Error("write_pcap: wire_len inconsistent with payload_len");
        }
        const std::uint32_t frame_len = 14 + e.wire_len;
        put_le32(out, static_cast<std::uint32_t>(e.ts_us / 1'000'000));
        put_le32(out, static_cast<std::uint32_t>(e.ts_us % 1'000'000));
        put_le32(out, frame_len);
        put_le32(out, frame_len);

        // Ethernet
        for (int i = 0; i < 12; ++i) out.push_back(static_cast<std::uint8_t>(i < 6 ? 0x02 : 0x04));
        put_be16(out, 0x0800);
        // IPv4, checksum left zero
        out.push_back(0x45);
        out.push_back(0);
        put_be16(out, static_cast<std::uint16_t>(e.wire_len));
        put_be16(out, 0);
        put_be16(out, 0x4000);
        out.push_back(64);
        switch (e.five_tuple.protocol) {
            case Protocol::TCP: out.push_back(6); break;
            case Protocol::UDP: out.push_back(17); break;
            case Protocol::ICMP: out.push_back(1); break;
        }
        put_be16(out, 0);
        put_be32(out, e.five_tuple.src_addr.v4_value());
        put_be32(out, e.five_tuple.dst_addr.v4_value());
        switch (e.five_tuple.protocol) {
            case Protocol::TCP:
                put_be16(out, e.five_tuple.src_port);
                put_be16(out, e.five_tuple.dst_port);
                put_be32(out, 0);
                put_be32(out, 0);
                out.push_back(0x50);
                out.push_back(e.tcp_flags.value_or(0));
                put_be16(out, 65535);
                put_be16(out, 0);
                put_be16(out, 0);
                break;
            case Protocol::UDP:
                put_be16(out, e.five_tuple.src_port);
                put_be16(out, e.five_tuple.dst_port);
                put_be16(out, static_cast<std::uint16_t>(8 + e.payload_len));
                put_be16(out, 0);
                break;
            case Protocol::ICMP: {
                const auto tc = e.icmp_type_code.value_or(std::make_pair<std::uint8_t, std::uint8_t>(8, 0));
                out.push_back(tc.first);
                out.push_back(tc.second);
                put_be16(out, 0);
                put_be32(out, 0);
                break;
            }
        }
        out.insert(out.end(), e.payload_len, 0);
    }
    return out;
}

}  // namespace nids

#include "nids/core_model.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>

namespace nids {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view text, const std::array<Enum, N>& all) {
    const std::string wanted = lower(text);
    for (Enum e : all) {
        if (lower(to_string(e)) == wanted) return e;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(Protocol p) {
    switch (p) {
        case Protocol::TCP: return "tcp";
        case Protocol::UDP: return "udp";
        case Protocol::ICMP: return "icmp";
    }
    return "?";
}

std::string_view to_string(ConnState s) {
    switch (s) {
        case ConnState::S0: return "S0";
        case ConnState::S1: return "S1";
        case ConnState::S2: return "S2";
        case ConnState::S3: return "S3";
        case ConnState::SF: return "SF";
        case ConnState::REJ: return "REJ";
        case ConnState::RSTO: return "RSTO";
        case ConnState::RSTR: return "RSTR";
        case ConnState::RSTOS0: return "RSTOS0";
        case ConnState::RSTRH: return "RSTRH";
        case ConnState::SH: return "SH";
        case ConnState::SHR: return "SHR";
        case ConnState::OTH: return "OTH";
    }
    return "?";
}

std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::L2L: return "L2L";
        case Direction::L2R: return "L2R";
        case Direction::R2L: return "R2L";
        case Direction::R2R: return "R2R";
    }
    return "?";
}

std::string_view to_string(Label l) { return l == Label::Abnormal ? "abnormal" : "normal"; }

std::optional<Protocol> parse_protocol(std::string_view text) {
    if (auto p = parse_enum(text, kAllProtocols)) return p;
    if (text == "6") return Protocol::TCP;
    if (text == "17") return Protocol::UDP;
    if (text == "1") return Protocol::ICMP;
    return std::nullopt;
}

std::optional<ConnState> parse_conn_state(std::string_view text) {
    return parse_enum(text, kAllConnStates);
}

std::optional<Direction> parse_direction(std::string_view text) {
    return parse_enum(text, kAllDirections);
}

std::optional<Label> parse_label(std::string_view text) {
    const std::string t = lower(text);
    if (t == "normal" || t == "0") return Label::Normal;
    if (t == "abnormal" || t == "1") return Label::Abnormal;
    return std::nullopt;
}

// --- IpAddress -------------------------------------------------------------

IpAddress IpAddress::v4(std::uint32_t host_order) {
    IpAddress a;
    a.family_ = Family::V4;
    a.bytes_[0] = static_cast<std::uint8_t>(host_order >> 24);
    a.bytes_[1] = static_cast<std::uint8_t>(host_order >> 16);
    a.bytes_[2] = static_cast<std::uint8_t>(host_order >> 8);
    a.bytes_[3] = static_cast<std::uint8_t>(host_order);
    return a;
}

IpAddress IpAddress::v6(const std::array<std::uint8_t, 16>& bytes) {
    IpAddress a;
    a.family_ = Family::V6;
    a.bytes_ = bytes;
    return a;
}

std::optional<IpAddress> IpAddress::try_parse(std::string_view text) {
    const std::string s(text);
    IpAddress a;
    if (s.find(':') == std::string::npos) {
        in_addr v4{};
        if (inet_pton(AF_INET, s.c_str(), &v4) != 1) return std::nullopt;
        a.family_ = Family::V4;
        std::memcpy(a.bytes_.data(), &v4, 4);
    } else {
        in6_addr v6{};
        if (inet_pton(AF_INET6, s.c_str(), &v6) != 1) return std::nullopt;
        a.family_ = Family::V6;
        std::memcpy(a.bytes_.data(), &v6, 16);
    }
    return a;
}

IpAddress IpAddress::parse(std::string_view text) {
    if (auto a = try_parse(text)) return *a;
    throw ParseError("invalid IP address '" + std::string(text) + "'");
}

std::uint32_t IpAddress::v4_value() const {
    return (std::uint32_t{bytes_[0]} << 24) | (std::uint32_t{bytes_[1]} << 16) |
           (std::uint32_t{bytes_[2]} << 8) | std::uint32_t{bytes_[3]};
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    if (is_v4()) {
        inet_ntop(AF_INET, bytes_.data(), buf, sizeof buf);
    } else {
        inet_ntop(AF_INET6, bytes_.data(), buf, sizeof buf);
    }
    return buf;
}

// --- Prefix ----------------------------------------------------------------

Prefix Prefix::parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        throw ConfigError("prefix '" + std::string(text) + "' lacks a /length");
    }
    auto addr = IpAddress::try_parse(text.substr(0, slash));
    if (!addr) throw ConfigError("prefix '" + std::string(text) + "' has a malformed address");

    const auto len_text = text.substr(slash + 1);
    int len = -1;
    auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    const int max_len = addr->is_v4() ? 32 : 128;
    if (ec != std::errc{} || ptr != len_text.data() + len_text.size() || len < 0 || len > max_len) {
        throw ConfigError("prefix '" + std::string(text) + "' has an invalid length");
    }
    Prefix p;
    p.base_ = *addr;
    p.length_ = len;
    return p;
}

bool Prefix::contains(const IpAddress& addr) const {
    if (addr.family() != base_.family()) return false;
    const auto a = addr.bytes();
    const auto b = base_.bytes();
    int remaining = length_;
    for (std::size_t i = 0; remaining > 0; ++i, remaining -= 8) {
        const int bits = std::min(remaining, 8);
        const auto mask = static_cast<std::uint8_t>(0xFFu << (8 - bits));
        if ((a[i] & mask) != (b[i] & mask)) return false;
    }
    return true;
}

std::string Prefix::to_string() const { return base_.to_string() + "/" + std::to_string(length_); }

// --- ServiceType -------------------------------------------------------------

ServiceType::ServiceType(std::string name) : name_(lower(name)) {
    if (name_.empty()) name_ = kOther;
}

std::size_t IpAddressHash::operator()(const IpAddress& a) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (auto b : a.bytes()) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
}

std::size_t FiveTupleHash::operator()(const FiveTuple& t) const noexcept {
    // FNV-1a over the canonical byte image.
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::uint8_t b) {
        h ^= b;
        h *= 1099511628211ull;
    };
    for (auto b : t.src_addr.bytes()) mix(b);
    for (auto b : t.dst_addr.bytes()) mix(b);
    mix(static_cast<std::uint8_t>(t.src_port >> 8));
    mix(static_cast<std::uint8_t>(t.src_port));
    mix(static_cast<std::uint8_t>(t.dst_port >> 8));
    mix(static_cast<std::uint8_t>(t.dst_port));
    mix(static_cast<std::uint8_t>(t.protocol));
    return static_cast<std::size_t>(h);
}

void validate(const SessionRecord& s) {
    if (!(s.duration_s >= 0.0) || !std::isfinite(s.duration_s)) {
        throw Error("session " + std::to_string(s.session_id) + ": negative or non-finite duration");
    }
    if (s.src_ip_bytes < s.src_bytes || s.dst_ip_bytes < s.dst_bytes) {
        throw Error("session " + std::to_string(s.session_id) + ": ip bytes below payload bytes");
    }
}

// --- LocalNetworks ---------------------------------------------------------

LocalNetworks::LocalNetworks(std::span<const std::string> prefixes) {
    for (const auto& p : prefixes) prefixes_.push_back(Prefix::parse(p));
    if (prefixes_.empty()) throw ConfigError("local_prefixes must not be empty");
}

LocalNetworks::LocalNetworks(std::vector<Prefix> prefixes) : prefixes_(std::move(prefixes)) {
    if (prefixes_.empty()) throw ConfigError("local_prefixes must not be empty");
}

bool LocalNetworks::is_local(const IpAddress& addr) const {
    return std::any_of(prefixes_.begin(), prefixes_.end(),
                       [&](const Prefix& p) { return p.contains(addr); });
}

Direction direction_of(const IpAddress& src, const IpAddress& dst, const LocalNetworks& local) {
    const bool s = local.is_local(src);
    const bool d = local.is_local(dst);
    if (s && d) return Direction::L2L;
    if (s) return Direction::L2R;
    if (d) return Direction::R2L;
    return Direction::R2R;
}

// --- ServiceTable ----------------------------------------------------------

ServiceTable ServiceTable::defaults() {
    ServiceTable t;
    t.set(80, Protocol::TCP, ServiceType::http());
    t.set(8080, Protocol::TCP, ServiceType::http());
    t.set(443, Protocol::TCP, ServiceType::https());
    t.set(53, Protocol::UDP, ServiceType::dns());
    t.set(53, Protocol::TCP, ServiceType::dns());
    t.set(25, Protocol::TCP, ServiceType::smtp());
    t.set(587, Protocol::TCP, ServiceType::smtp());
    t.set(20, Protocol::TCP, ServiceType::ftp());
    t.set(21, Protocol::TCP, ServiceType::ftp());
    t.set(22, Protocol::TCP, ServiceType::ssh());
    return t;
}

void ServiceTable::set(std::uint16_t port, Protocol proto, ServiceType service) {
    table_[{port, proto}] = std::move(service);
}

ServiceType ServiceTable::lookup(std::uint16_t port, Protocol proto) const {
    auto it = table_.find({port, proto});
    return it == table_.end() ? ServiceType::other() : it->second;
}

std::vector<std::tuple<std::uint16_t, Protocol, ServiceType>> ServiceTable::entries() const {
    std::vector<std::tuple<std::uint16_t, Protocol, ServiceType>> out;
    for (const auto& [key, svc] : table_) out.emplace_back(key.first, key.second, svc);
    return out;
}

ServiceType service_of(std::uint16_t dst_port, Protocol proto, const ServiceTable& table) {
    if (proto == Protocol::ICMP) return ServiceType::other();
    return table.lookup(dst_port, proto);
}

}  // namespace nids

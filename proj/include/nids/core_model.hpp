#pragma once

// Shared session vocabulary: addresses, 5-tuples, categorical features,
// session records and class labels.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nids {

/// Base error for everything thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration (bad prefix, bad timeout, unknown key value).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (capture bytes, JSONL lines, CSV rows, model files).
class ParseError : public Error {
public:
    using Error::Error;
};

enum class Protocol : std::uint8_t { TCP, UDP, ICMP };

enum class ConnState : std::uint8_t {
    S0, S1, S2, S3, SF, REJ, RSTO, RSTR, RSTOS0, RSTRH, SH, SHR, OTH
};

enum class Direction : std::uint8_t { L2L, L2R, R2L, R2R };

enum class Label : std::uint8_t { Normal, Abnormal };

inline constexpr std::array kAllProtocols{Protocol::TCP, Protocol::UDP, Protocol::ICMP};
inline constexpr std::array kAllConnStates{
    ConnState::S0,  ConnState::S1,   ConnState::S2,     ConnState::S3,    ConnState::SF,
    ConnState::REJ, ConnState::RSTO, ConnState::RSTR,   ConnState::RSTOS0,
    ConnState::RSTRH, ConnState::SH, ConnState::SHR,    ConnState::OTH};
inline constexpr std::array kAllDirections{Direction::L2L, Direction::L2R, Direction::R2L,
                                           Direction::R2R};

std::string_view to_string(Protocol p);
std::string_view to_string(ConnState s);
std::string_view to_string(Direction d);
std::string_view to_string(Label l);

// Case-insensitive; protocol also accepts IANA numbers ("6", "17", "1").
std::optional<Protocol> parse_protocol(std::string_view text);
std::optional<ConnState> parse_conn_state(std::string_view text);
std::optional<Direction> parse_direction(std::string_view text);
std::optional<Label> parse_label(std::string_view text);

/// S0..S3: the handshake never completed or was never closed cleanly.
constexpr bool is_syn_error(ConnState s) {
    return s == ConnState::S0 || s == ConnState::S1 || s == ConnState::S2 || s == ConnState::S3;
}

/// IPv4 or IPv6 address, stored in network byte order.
class IpAddress {
public:
    enum class Family : std::uint8_t { V4, V6 };

    IpAddress() = default;

    static IpAddress v4(std::uint32_t host_order);
    static IpAddress v6(const std::array<std::uint8_t, 16>& bytes);
    static std::optional<IpAddress> try_parse(std::string_view text);
    /// Throws ParseError on malformed text.
    static IpAddress parse(std::string_view text);

    Family family() const { return family_; }
    bool is_v4() const { return family_ == Family::V4; }
    /// Only meaningful for v4 addresses.
    std::uint32_t v4_value() const;
    std::span<const std::uint8_t> bytes() const {
        return {bytes_.data(), is_v4() ? 4u : 16u};
    }
    std::string to_string() const;

    auto operator<=>(const IpAddress&) const = default;

private:
    Family family_ = Family::V4;
    std::array<std::uint8_t, 16> bytes_{};
};

/// CIDR prefix such as 10.0.0.0/8 or fd00::/8.
class Prefix {
public:
    /// Throws ConfigError on malformed text.
    static Prefix parse(std::string_view text);

    bool contains(const IpAddress& addr) const;
    std::string to_string() const;
    bool operator==(const Prefix&) const = default;

private:
    IpAddress base_;
    int length_ = 0;
};

/// Categorical service name. The fixed vocabulary is http, https, dns, smtp,
/// ftp, ssh and other; configured port tables may add further names.
class ServiceType {
public:
    ServiceType() : name_(kOther) {}
    explicit ServiceType(std::string name);

    static ServiceType http() { return ServiceType("http"); }
    static ServiceType https() { return ServiceType("https"); }
    static ServiceType dns() { return ServiceType("dns"); }
    static ServiceType smtp() { return ServiceType("smtp"); }
    static ServiceType ftp() { return ServiceType("ftp"); }
    static ServiceType ssh() { return ServiceType("ssh"); }
    static ServiceType other() { return ServiceType(); }

    const std::string& name() const { return name_; }
    bool is_other() const { return name_ == kOther; }
    auto operator<=>(const ServiceType&) const = default;

    static constexpr std::string_view kOther = "other";

private:
    std::string name_;
};

struct IpAddressHash {
    std::size_t operator()(const IpAddress& a) const noexcept;
};

struct FiveTuple {
    IpAddress src_addr;
    std::uint16_t src_port = 0;
    IpAddress dst_addr;
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::TCP;

    FiveTuple reversed() const { return {dst_addr, dst_port, src_addr, src_port, protocol}; }
    auto operator<=>(const FiveTuple&) const = default;
};

struct FiveTupleHash {
    std::size_t operator()(const FiveTuple& t) const noexcept;
};

/// One network session with the 16 basic features.
struct SessionRecord {
    std::uint64_t session_id = 0;
    std::int64_t timestamp_ms = 0;
    double duration_s = 0.0;
    FiveTuple five_tuple;
    ServiceType service;
    ConnState conn_state = ConnState::OTH;
    Direction direction = Direction::R2R;
    std::uint64_t src_packets = 0;
    std::uint64_t src_bytes = 0;
    std::uint64_t src_ip_bytes = 0;
    std::uint64_t dst_packets = 0;
    std::uint64_t dst_bytes = 0;
    std::uint64_t dst_ip_bytes = 0;

    bool operator==(const SessionRecord&) const = default;
};

/// Throws Error when the record breaks a field invariant.
void validate(const SessionRecord& s);

struct ClassLabel {
    Label label = Label::Normal;
    std::optional<std::string> attack_category;  // only when abnormal

    static ClassLabel normal() { return {}; }
    static ClassLabel abnormal(std::optional<std::string> category = std::nullopt) {
        return {Label::Abnormal, std::move(category)};
    }
    bool is_abnormal() const { return label == Label::Abnormal; }
    bool operator==(const ClassLabel&) const = default;
};

/// Local-network membership used to derive session direction.
class LocalNetworks {
public:
    /// Throws ConfigError when the list is empty or any prefix is malformed.
    explicit LocalNetworks(std::span<const std::string> prefixes);
    explicit LocalNetworks(std::vector<Prefix> prefixes);

    bool is_local(const IpAddress& addr) const;
    std::span<const Prefix> prefixes() const { return prefixes_; }

private:
    std::vector<Prefix> prefixes_;
};

Direction direction_of(const IpAddress& src, const IpAddress& dst, const LocalNetworks& local);

/// Destination-port lookup table for service detection.
class ServiceTable {
public:
    /// IANA well-known subset for the fixed vocabulary.
    static ServiceTable defaults();

    void set(std::uint16_t port, Protocol proto, ServiceType service);
    ServiceType lookup(std::uint16_t port, Protocol proto) const;

    /// (port, protocol, service) entries in ascending key order.
    std::vector<std::tuple<std::uint16_t, Protocol, ServiceType>> entries() const;

private:
    std::map<std::pair<std::uint16_t, Protocol>, ServiceType> table_;
};

/// Returns other for unmapped ports and always for ICMP.
ServiceType service_of(std::uint16_t dst_port, Protocol proto, const ServiceTable& table);

}  // namespace nids

#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>

#include "nids/core_model.hpp"

namespace nids {

/// Counts over the most recent prior sessions to the same destination address.
struct HostFeatures {
    std::uint32_t dst_host_count = 0;                // ... that also share the source address
    std::uint32_t dst_host_same_src_port_count = 0;  // ... of those, same source port
    std::uint32_t dst_host_serror_count = 0;         // ... of those, SYN error
    std::uint32_t dst_host_srv_count = 0;            // ... sharing the service type
    std::uint32_t dst_host_srv_serror_count = 0;     // ... of those, SYN error

    bool operator==(const HostFeatures&) const = default;
};

/// Basic plus host-based features: the 21-feature record.
struct FullFeatureRecord {
    SessionRecord session;
    HostFeatures host;

    bool operator==(const FullFeatureRecord&) const = default;
};

/// Order-sensitive, single-writer window state keyed by destination address.
class HostWindow {
public:
    static constexpr std::size_t kDefaultCapacity = 100;

    /// include_current = true counts the session being scored in its own window.
    explicit HostWindow(std::size_t capacity = kDefaultCapacity, bool include_current = false);

    /// Scores the session against the window, then appends it.
    HostFeatures update_and_extract(const SessionRecord& session);

    std::size_t capacity() const { return capacity_; }
    std::uint64_t sessions_seen() const { return total_; }
    std::size_t destinations() const { return per_dst_.size(); }

private:
    struct Summary {
        IpAddress src_addr;
        std::uint16_t src_port;
        ServiceType service;
        bool syn_error;
    };

    std::size_t capacity_;
    bool include_current_;
    std::uint64_t total_ = 0;
    std::unordered_map<IpAddress, std::deque<Summary>, IpAddressHash> per_dst_;
};

}  // namespace nids

#pragma once

// Groups packets into bidirectional sessions and emits SessionRecords with
// the basic features. TCP sessions end in one of the usual conn states
// (SF, S0, REJ, RSTO, ...) from a simplified flag state machine.

#include <array>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "nids/core_model.hpp"
#include "nids/packet_io.hpp"

namespace nids {

/// Canonical 5-tuple: the lower (addr, port) endpoint comes first, so both
/// directions of a conversation share one key.
struct FlowKey {
    FiveTuple tuple;

    static FlowKey of(const FiveTuple& observed);
    auto operator<=>(const FlowKey&) const = default;
};

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const noexcept { return FiveTupleHash{}(k.tuple); }
};

enum class TerminationReason : std::uint8_t { Open, Fin, Rst, Timeout, Eof };

/// Per-flow accumulator. Index 0 is the originator direction, 1 the responder.
struct FlowState {
    FiveTuple originator;  // oriented as the first packet was sent
    std::int64_t first_ts_us = 0;
    std::int64_t last_ts_us = 0;
    std::array<std::uint64_t, 2> packets{};
    std::array<std::uint64_t, 2> bytes{};
    std::array<std::uint64_t, 2> ip_bytes{};

    // TCP history
    bool orig_syn = false;          // originator sent a bare SYN
    bool first_was_synack = false;  // the very first packet was a SYN/ACK
    bool resp_synack = false;       // responder answered with SYN/ACK
    std::array<bool, 2> fin{};
    std::array<bool, 2> rst{};
    int last_fin_dir = -1;

    TerminationReason terminated = TerminationReason::Open;
};

/// Connection state for a flow as of its current history.
ConnState conn_state_of(const FlowState& flow);

struct AssemblerConfig {
    double tcp_inactivity_timeout_s = 300.0;
    double udp_inactivity_timeout_s = 60.0;
    double icmp_inactivity_timeout_s = 60.0;
    double reorder_tolerance_s = 1.0;
    std::vector<std::string> local_prefixes{"10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16"};
    ServiceTable services = ServiceTable::defaults();

    /// Throws ConfigError on non-positive timeouts or bad prefixes.
    void validate() const;
};

struct AssemblerStats {
    std::uint64_t accepted_packets = 0;
    std::uint64_t out_of_order_rejected = 0;
    std::uint64_t sessions_emitted = 0;
    std::map<TerminationReason, std::uint64_t> by_reason;
};

/// Single-writer session table. Records leave in nondecreasing start-time
/// order: a finished session is held back while an earlier-starting flow is
/// still open or could still be created within the reorder tolerance.
class FlowAssembler {
public:
    explicit FlowAssembler(AssemblerConfig config);

    /// Processes one packet; returns sessions that became releasable.
    std::vector<SessionRecord> advance(const PacketEvent& packet);

    /// Closes every open flow (reason eof) and releases everything held.
    std::vector<SessionRecord> flush_all(std::int64_t final_ts_us);

    const AssemblerStats& stats() const { return stats_; }
    std::size_t open_flows() const { return flows_.size(); }
    const AssemblerConfig& config() const { return config_; }

private:
    struct Finished {
        std::int64_t first_ts_us;
        std::uint64_t seq;
        FlowState flow;
        bool operator>(const Finished& o) const {
            return first_ts_us != o.first_ts_us ? first_ts_us > o.first_ts_us : seq > o.seq;
        }
    };

    std::int64_t timeout_us(Protocol p) const;
    void finish(const FlowKey& key, TerminationReason reason);
    void evict_idle(std::int64_t now_us);
    std::vector<SessionRecord> release(std::int64_t horizon_us);
    SessionRecord to_record(const FlowState& flow);

    AssemblerConfig config_;
    LocalNetworks local_;
    AssemblerStats stats_;

    std::unordered_map<FlowKey, FlowState, FlowKeyHash> flows_;
    // (last_ts, key) per protocol, so each queue front is the idlest flow.
    std::array<std::set<std::pair<std::int64_t, FlowKey>>, 3> idle_index_;
    std::multiset<std::int64_t> open_starts_;
    std::priority_queue<Finished, std::vector<Finished>, std::greater<>> finished_;

    std::int64_t watermark_us_ = INT64_MIN;
    std::uint64_t finish_seq_ = 0;
    std::uint64_t next_session_id_ = 1;
};

/// Convenience: runs every packet through a fresh assembler and flushes.
std::vector<SessionRecord> assemble(std::span<const PacketEvent> packets,
                                    const AssemblerConfig& config,
                                    AssemblerStats* stats = nullptr);

}  // namespace nids

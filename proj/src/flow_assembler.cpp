#include "nids/flow_assembler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nids {

FlowKey FlowKey::of(const FiveTuple& t) {
    const auto a = std::tie(t.src_addr, t.src_port);
    const auto b = std::tie(t.dst_addr, t.dst_port);
    if (b < a) return FlowKey{t.reversed()};
    return FlowKey{t};
}

ConnState conn_state_of(const FlowState& f) {
    if (f.originator.protocol != Protocol::TCP) {
        return f.packets[0] > 0 && f.packets[1] > 0 ? ConnState::SF : ConnState::S0;
    }
    if (f.orig_syn) {
        if (!f.resp_synack) {
            if (f.rst[1]) return ConnState::REJ;
            if (f.rst[0]) return ConnState::RSTOS0;
            if (f.fin[0]) return ConnState::SH;
            if (f.packets[1] > 0) return ConnState::OTH;
            return ConnState::S0;
        }
        if (f.rst[0]) return ConnState::RSTO;
        if (f.rst[1]) return ConnState::RSTR;
        if (f.fin[0] && f.fin[1]) return ConnState::SF;
        if (f.fin[0]) return ConnState::S2;
        if (f.fin[1]) return ConnState::S3;
        return ConnState::S1;
    }
    // The capture opened with the responder's SYN/ACK.
    if (f.first_was_synack) {
        if (f.rst[0]) return ConnState::RSTRH;
        if (f.fin[0]) return ConnState::SHR;
    }
    return ConnState::OTH;
}

void AssemblerConfig::validate() const {
    if (!(tcp_inactivity_timeout_s > 0) || !(udp_inactivity_timeout_s > 0) ||
        !(icmp_inactivity_timeout_s > 0)) {
        throw ConfigError("inactivity timeouts must be > 0");
    }
    if (!(reorder_tolerance_s >= 0)) throw ConfigError("reorder tolerance must be >= 0");
    LocalNetworks check(local_prefixes);
}

namespace {

std::int64_t seconds_to_us(double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); }

std::size_t proto_slot(Protocol p) { return static_cast<std::size_t>(p); }

}  // namespace

FlowAssembler::FlowAssembler(AssemblerConfig config)
    : config_(std::move(config)), local_(config_.local_prefixes) {
    config_.validate();
}

std::int64_t FlowAssembler::timeout_us(Protocol p) const {
    switch (p) {
        case Protocol::TCP: return seconds_to_us(config_.tcp_inactivity_timeout_s);
        case Protocol::UDP: return seconds_to_us(config_.udp_inactivity_timeout_s);
        case Protocol::ICMP: return seconds_to_us(config_.icmp_inactivity_timeout_s);
    }
    return 0;
}

void FlowAssembler::finish(const FlowKey& key, TerminationReason reason) {
    auto it = flows_.find(key);
    if (it == flows_.end()) return;
    FlowState& f = it->second;
    f.terminated = reason;
    idle_index_[proto_slot(key.tuple.protocol)].erase({f.last_ts_us, key});
    open_starts_.erase(open_starts_.find(f.first_ts_us));
    ++stats_.by_reason[reason];
    finished_.push(Finished{f.first_ts_us, finish_seq_++, std::move(f)});
    flows_.erase(it);
}

void FlowAssembler::evict_idle(std::int64_t now_us) {
    for (Protocol p : kAllProtocols) {
        auto& index = idle_index_[proto_slot(p)];
        const std::int64_t limit = timeout_us(p);
        while (!index.empty() && now_us - index.begin()->first > limit) {
            const FlowKey key = index.begin()->second;
            finish(key, TerminationReason::Timeout);
        }
    }
}

SessionRecord FlowAssembler::to_record(const FlowState& f) {
    SessionRecord r;
    r.session_id = next_session_id_++;
    r.timestamp_ms = f.first_ts_us >= 0 ? f.first_ts_us / 1000 : -((-f.first_ts_us + 999) / 1000);
    r.duration_s = static_cast<double>(f.last_ts_us - f.first_ts_us) / 1e6;
    r.five_tuple = f.originator;
    r.service = service_of(f.originator.dst_port, f.originator.protocol, config_.services);
    r.conn_state = conn_state_of(f);
    r.direction = direction_of(f.originator.src_addr, f.originator.dst_addr, local_);
    r.src_packets = f.packets[0];
    r.src_bytes = f.bytes[0];
    r.src_ip_bytes = f.ip_bytes[0];
    r.dst_packets = f.packets[1];
    r.dst_bytes = f.bytes[1];
    r.dst_ip_bytes = f.ip_bytes[1];
    return r;
}

std::vector<SessionRecord> FlowAssembler::release(std::int64_t horizon_us) {
    std::vector<SessionRecord> out;
    while (!finished_.empty() && finished_.top().first_ts_us <= horizon_us) {
        out.push_back(to_record(finished_.top().flow));
        finished_.pop();
    }
    stats_.sessions_emitted += out.size();
    return out;
}

std::vector<SessionRecord> FlowAssembler::advance(const PacketEvent& pkt) {
    const std::int64_t tolerance = seconds_to_us(config_.reorder_tolerance_s);
    if (watermark_us_ != INT64_MIN && pkt.ts_us < watermark_us_ - tolerance) {
        ++stats_.out_of_order_rejected;
        return {};
    }
    ++stats_.accepted_packets;
    watermark_us_ = std::max(watermark_us_, pkt.ts_us);
    evict_idle(watermark_us_);

    const FlowKey key = FlowKey::of(pkt.five_tuple);
    auto& index = idle_index_[proto_slot(key.tuple.protocol)];
    auto [it, created] = flows_.try_emplace(key);
    FlowState& f = it->second;
    if (created) {
        f.originator = pkt.five_tuple;
        f.first_ts_us = f.last_ts_us = pkt.ts_us;
        open_starts_.insert(f.first_ts_us);
        index.insert({f.last_ts_us, key});
        f.first_was_synack = pkt.has(kSyn) && pkt.has(kAck);
    } else {
        if (pkt.ts_us < f.first_ts_us) {
            open_starts_.erase(open_starts_.find(f.first_ts_us));
            f.first_ts_us = pkt.ts_us;
            open_starts_.insert(f.first_ts_us);
        }
        if (pkt.ts_us > f.last_ts_us) {
            index.erase({f.last_ts_us, key});
            f.last_ts_us = pkt.ts_us;
            index.insert({f.last_ts_us, key});
        }
    }

    const bool from_orig = pkt.five_tuple.src_addr == f.originator.src_addr &&
                           pkt.five_tuple.src_port == f.originator.src_port;
    const int dir = from_orig ? 0 : 1;
    ++f.packets[dir];
    f.bytes[dir] += pkt.payload_len;
    f.ip_bytes[dir] += pkt.wire_len;

    if (key.tuple.protocol == Protocol::TCP) {
        const bool syn = pkt.has(kSyn);
        const bool ack = pkt.has(kAck);
        if (dir == 0 && syn && !ack) f.orig_syn = true;
        if (dir == 1 && syn && ack) f.resp_synack = true;
        if (pkt.has(kRst)) f.rst[dir] = true;
        const bool fin_complete_ack =
            f.fin[0] && f.fin[1] && ack && dir != f.last_fin_dir && !pkt.has(kFin);
        if (pkt.has(kFin)) {
            f.fin[dir] = true;
            f.last_fin_dir = dir;
        }
        if (pkt.has(kRst)) {
            finish(key, TerminationReason::Rst);
        } else if (fin_complete_ack) {
            finish(key, TerminationReason::Fin);
        }
    }

    std::int64_t horizon = watermark_us_ - tolerance;
    if (!open_starts_.empty()) horizon = std::min(horizon, *open_starts_.begin());
    return release(horizon);
}

std::vector<SessionRecord> FlowAssembler::flush_all(std::int64_t final_ts_us) {
    std::vector<FlowKey> keys;
    keys.reserve(flows_.size());
    for (const auto& [key, flow] : flows_) keys.push_back(key);
    for (const auto& key : keys) {
        const FlowState& f = flows_.at(key);
        const bool idle = final_ts_us - f.last_ts_us > timeout_us(key.tuple.protocol);
        finish(key, idle ? TerminationReason::Timeout : TerminationReason::Eof);
    }
    return release(std::numeric_limits<std::int64_t>::max());
}

std::vector<SessionRecord> assemble(std::span<const PacketEvent> packets,
                                    const AssemblerConfig& config, AssemblerStats* stats) {
    FlowAssembler assembler(config);
    std::vector<SessionRecord> out;
    std::int64_t last = 0;
    for (const auto& p : packets) {
        auto emitted = assembler.advance(p);
        out.insert(out.end(), std::make_move_iterator(emitted.begin()),
                   std::make_move_iterator(emitted.end()));
        last = std::max(last, p.ts_us);
    }
    auto rest = assembler.flush_all(last);
    out.insert(out.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    if (stats) *stats = assembler.stats();
    return out;
}

}  // namespace nids

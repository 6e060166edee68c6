#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "nids/host_window.hpp"
#include "nids/util.hpp"

namespace nids::test {

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("nids-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string operator/(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline ConnState random_conn_state(Rng& rng) {
    return kAllConnStates[uniform_index(rng, kAllConnStates.size())];
}

/// A valid session. Small address and port pools so window predicates hit.
inline SessionRecord random_session(Rng& rng, std::size_t destinations = 20, std::uint64_t id = 0) {
    static const std::vector<ServiceType> services{ServiceType::http(), ServiceType::https(),
                                                   ServiceType::dns(),  ServiceType::ssh(),
                                                   ServiceType::smtp(), ServiceType::other()};
    SessionRecord s;
    s.session_id = id;
    s.timestamp_ms = 1421884800000 + static_cast<std::int64_t>(uniform_index(rng, 1000000));
    s.duration_s = static_cast<double>(uniform_index(rng, 100000)) / 1000.0;
    const auto proto = kAllProtocols[uniform_index(rng, 3)];
    s.five_tuple.protocol = proto;
    s.five_tuple.src_addr = IpAddress::v4(0x0A000000u + static_cast<std::uint32_t>(uniform_index(rng, 8)));
    s.five_tuple.dst_addr =
        IpAddress::v4(0xC0A80000u + static_cast<std::uint32_t>(uniform_index(rng, destinations)));
    if (proto != Protocol::ICMP) {
        s.five_tuple.src_port = static_cast<std::uint16_t>(40000 + uniform_index(rng, 4));
        s.five_tuple.dst_port = static_cast<std::uint16_t>(uniform_index(rng, 1024));
    }
    s.service = proto == Protocol::ICMP ? ServiceType::other() : services[uniform_index(rng, services.size())];
    s.conn_state = random_conn_state(rng);
    s.direction = kAllDirections[uniform_index(rng, 4)];
    s.src_packets = uniform_index(rng, 50);
    s.src_bytes = uniform_index(rng, 100000);
    s.src_ip_bytes = s.src_bytes + 20 * s.src_packets + uniform_index(rng, 100);
    s.dst_packets = uniform_index(rng, 50);
    s.dst_bytes = uniform_index(rng, 100000);
    s.dst_ip_bytes = s.dst_bytes + 20 * s.dst_packets + uniform_index(rng, 100);
    return s;
}

inline FullFeatureRecord random_full_record(Rng& rng) {
    FullFeatureRecord r;
    r.session = random_session(rng, 20, rng() >> 1);
    auto count = [&] { return static_cast<std::uint32_t>(uniform_index(rng, 101)); };
    r.host.dst_host_count = count();
    r.host.dst_host_same_src_port_count = static_cast<std::uint32_t>(uniform_index(rng, r.host.dst_host_count + 1));
    r.host.dst_host_serror_count = static_cast<std::uint32_t>(uniform_index(rng, r.host.dst_host_count + 1));
    r.host.dst_host_srv_count = count();
    r.host.dst_host_srv_serror_count = static_cast<std::uint32_t>(uniform_index(rng, r.host.dst_host_srv_count + 1));
    return r;
}

/// Independent window: scan every earlier session, keep the last `capacity`
/// with the same destination, apply the predicates.
inline std::vector<HostFeatures> brute_force_host_features(const std::vector<SessionRecord>& sessions,
                                                           std::size_t capacity = 100) {
    std::vector<HostFeatures> out;
    out.reserve(sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const SessionRecord& cur = sessions[i];
        std::vector<const SessionRecord*> prior;
        for (std::size_t j = i; j-- > 0 && prior.size() < capacity;) {
            if (sessions[j].five_tuple.dst_addr == cur.five_tuple.dst_addr) prior.push_back(&sessions[j]);
        }
        HostFeatures f;
        for (const SessionRecord* p : prior) {
            const bool serr = is_syn_error(p->conn_state);
            if (p->five_tuple.src_addr == cur.five_tuple.src_addr) {
                f.dst_host_count++;
                if (p->five_tuple.src_port == cur.five_tuple.src_port) f.dst_host_same_src_port_count++;
                if (serr) f.dst_host_serror_count++;
            }
            if (p->service == cur.service) {
                f.dst_host_srv_count++;
                if (serr) f.dst_host_srv_serror_count++;
            }
        }
        out.push_back(f);
    }
    return out;
}

}  // namespace nids::test

#include "nids/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nids/util.hpp"

namespace nids {

namespace {

class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}

    double unit() { return uniform_unit(rng_); }
    bool chance(double p) { return unit() < p; }
    std::uint64_t index(std::uint64_t n) { return uniform_index(rng_, n); }
    std::int64_t range(std::int64_t lo, std::int64_t hi) {
        return lo + static_cast<std::int64_t>(index(static_cast<std::uint64_t>(hi - lo + 1)));
    }
    double normal() {
        double u = unit();
        while (u <= 0.0) u = unit();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * unit());
    }
    double lognormal(double median, double sigma) { return median * std::exp(sigma * normal()); }
    double exponential(double mean) {
        double u = unit();
        while (u <= 0.0) u = unit();
        return -mean * std::log(u);
    }

private:
    Rng rng_;
};

struct Server {
    IpAddress addr;
    std::uint16_t port;
    Protocol proto;
    ServiceType service;
    bool local;
};

std::vector<Server> make_servers(std::size_t n) {
    struct Kind {
        std::uint16_t port;
        Protocol proto;
        ServiceType svc;
    };
    const std::vector<Kind> kinds{
        {80, Protocol::TCP, ServiceType::http()},   {443, Protocol::TCP, ServiceType::https()},
        {53, Protocol::UDP, ServiceType::dns()},    {25, Protocol::TCP, ServiceType::smtp()},
        {22, Protocol::TCP, ServiceType::ssh()},    {21, Protocol::TCP, ServiceType::ftp()},
        {3306, Protocol::TCP, ServiceType::other()}, {123, Protocol::UDP, ServiceType::other()},
    };
    std::vector<Server> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& k = kinds[i % kinds.size()];
        const bool local = i % 3 != 2;
        const auto host = static_cast<std::uint32_t>(i + 10);
        const IpAddress addr = local ? IpAddress::v4((10u << 24) | (1u << 16) | host)
                                     : IpAddress::v4((93u << 24) | (184u << 16) | (216u << 8) | host);
        out.push_back({addr, k.port, k.proto, k.svc, local});
    }
    return out;
}

IpAddress client_addr(std::size_t c) {
    return IpAddress::v4((10u << 24) | static_cast<std::uint32_t>((c / 250) << 8) |
                         static_cast<std::uint32_t>(c % 250 + 1));
}

std::uint64_t header_bytes(Protocol p) { return p == Protocol::TCP ? 40 : 28; }

void fill_volume(SessionRecord& s, Draw& d, double src_median, double dst_median, double spread) {
    if (s.conn_state == ConnState::S0 || s.conn_state == ConnState::REJ || s.conn_state == ConnState::RSTOS0) {
        s.src_packets = static_cast<std::uint64_t>(d.range(1, 3));
        s.dst_packets = s.conn_state == ConnState::REJ ? 1 : 0;
        s.src_bytes = 0;
        s.dst_bytes = 0;
    } else {
        s.src_bytes = static_cast<std::uint64_t>(d.lognormal(src_median, spread));
        s.dst_bytes = static_cast<std::uint64_t>(d.lognormal(dst_median, spread));
        s.src_packets = 2 + s.src_bytes / 1000 + static_cast<std::uint64_t>(d.range(0, 4));
        s.dst_packets = 1 + s.dst_bytes / 1400 + static_cast<std::uint64_t>(d.range(0, 4));
    }
    const auto h = header_bytes(s.five_tuple.protocol);
    s.src_ip_bytes = s.src_bytes + h * s.src_packets;
    s.dst_ip_bytes = s.dst_bytes + h * s.dst_packets;
}

ConnState normal_state(Draw& d, Protocol p) {
    if (p != Protocol::TCP) return d.chance(0.9) ? ConnState::SF : ConnState::S0;
    const double u = d.unit();
    if (u < 0.93) return ConnState::SF;
    if (u < 0.95) return ConnState::S1;
    if (u < 0.97) return ConnState::RSTO;
    if (u < 0.985) return ConnState::RSTR;
    return ConnState::SH;
}

void normal_shape(SessionRecord& s, const Server& sv, Draw& d) {
    s.conn_state = normal_state(d, sv.proto);
    const std::string& n = sv.service.name();
    double src = 300, dst = 2000, dur = 0.3;
    if (n == "http") src = 450, dst = 12000, dur = 0.8;
    else if (n == "https") src = 900, dst = 25000, dur = 2.0;
    else if (n == "dns") src = 40, dst = 120, dur = 0.01;
    else if (n == "smtp") src = 6000, dst = 400, dur = 1.5;
    else if (n == "ssh") src = 3000, dst = 5000, dur = 30.0;
    else if (n == "ftp") src = 200, dst = 60000, dur = 5.0;
    fill_volume(s, d, src, dst, 0.9);
    s.duration_s = d.lognormal(dur, 1.0);
}

}  // namespace

std::vector<LabeledSession> synth_sessions(const SynthConfig& cfg) {
    Draw d(derive_seed(cfg.seed, "synth"));
    const auto servers = make_servers(std::max<std::size_t>(1, cfg.destinations));
    std::vector<std::size_t> local_servers;
    for (std::size_t i = 0; i < servers.size(); ++i) {
        if (servers[i].local) local_servers.push_back(i);
    }
    if (local_servers.empty()) local_servers.push_back(0);
    const LocalNetworks local(std::vector<Prefix>{Prefix::parse("10.0.0.0/8")});

    std::vector<LabeledSession> out;
    out.reserve(cfg.sessions);
    double t_ms = static_cast<double>(cfg.start_ms);

    // Attack campaigns: one attacker against one target, of one kind.
    int kind = 0;
    IpAddress attacker;
    std::size_t target = 0;
    std::size_t campaign_left = 0;
    std::uint16_t scan_port = 1;

    for (std::size_t i = 0; i < cfg.sessions; ++i) {
        t_ms += d.exponential(1000.0 / cfg.sessions_per_s);
        LabeledSession ls;
        SessionRecord& s = ls.session;
        s.session_id = i + 1;
        s.timestamp_ms = static_cast<std::int64_t>(t_ms);
        const bool abnormal = d.chance(cfg.abnormal_fraction);

        if (!abnormal) {
            const auto& sv = servers[d.index(servers.size())];
            s.five_tuple = {client_addr(d.index(std::max<std::size_t>(1, cfg.clients))),
                            static_cast<std::uint16_t>(d.range(32768, 60999)), sv.addr, sv.port, sv.proto};
            s.service = sv.service;
            normal_shape(s, sv, d);
            if (d.chance(cfg.overlap)) {
                // A misbehaving but benign client: failed or odd connection.
                s.five_tuple.dst_port = static_cast<std::uint16_t>(d.range(1, 1024));
                s.five_tuple.protocol = Protocol::TCP;
                s.service = ServiceTable::defaults().lookup(s.five_tuple.dst_port, Protocol::TCP);
                s.conn_state = d.chance(0.5) ? ConnState::S0 : ConnState::REJ;
                fill_volume(s, d, 100, 100, 1.0);
                s.duration_s = d.lognormal(0.5, 1.5);
            }
            ls.label = ClassLabel::normal();
        } else {
            if (campaign_left == 0) {
                kind = static_cast<int>(d.index(4));
                attacker = IpAddress::v4((175u << 24) | (45u << 16) | (176u << 8) |
                                         static_cast<std::uint32_t>(d.range(0, 3)));
                target = local_servers[d.index(local_servers.size())];
                campaign_left = static_cast<std::size_t>(d.range(5, 60));
                scan_port = static_cast<std::uint16_t>(d.range(1, 2000));
            }
            --campaign_left;
            const Server& sv = servers[target];
            s.five_tuple = {attacker, static_cast<std::uint16_t>(d.range(1024, 65535)), sv.addr, sv.port, sv.proto};
            std::string category;
            switch (kind) {
                case 0:  // exploit against the service
                    category = "exploits";
                    s.five_tuple.protocol = Protocol::TCP;
                    s.conn_state = d.chance(0.6) ? ConnState::SF : ConnState::RSTO;
                    fill_volume(s, d, 2500, 250, 1.0);
                    s.duration_s = d.lognormal(0.05, 1.2);
                    break;
                case 1:  // port scan
                    category = "reconnaissance";
                    s.five_tuple.protocol = Protocol::TCP;
                    s.five_tuple.dst_port = scan_port++;
                    s.conn_state = d.chance(0.5) ? ConnState::S0 : ConnState::REJ;
                    fill_volume(s, d, 0, 0, 0.0);
                    s.duration_s = d.lognormal(0.001, 1.0);
                    break;
                case 2:  // flood
                    category = "dos";
                    s.five_tuple.protocol = Protocol::TCP;
                    s.conn_state = d.chance(0.7) ? ConnState::S0 : ConnState::SF;
                    fill_volume(s, d, 60, 20, 0.5);
                    s.duration_s = d.lognormal(0.0005, 1.0);
                    break;
                default:  // fuzzing
                    category = "fuzzers";
                    s.five_tuple.protocol = d.chance(0.5) ? Protocol::UDP : Protocol::TCP;
                    s.five_tuple.dst_port = static_cast<std::uint16_t>(d.range(1, 65535));
                    s.conn_state = d.chance(0.5) ? ConnState::SF : ConnState::S0;
                    fill_volume(s, d, 800, 50, 1.5);
                    s.duration_s = d.lognormal(0.2, 1.5);
                    break;
            }
            if (d.chance(cfg.overlap)) {
                // Mimicry: the attack looks like ordinary traffic to the service.
                s.five_tuple.src_addr = client_addr(d.index(std::max<std::size_t>(1, cfg.clients)));
                s.five_tuple.src_port = static_cast<std::uint16_t>(d.range(32768, 60999));
                s.five_tuple.dst_port = sv.port;
                s.five_tuple.protocol = sv.proto;
                normal_shape(s, sv, d);
            }
            if (s.five_tuple.protocol == Protocol::ICMP) s.five_tuple.src_port = s.five_tuple.dst_port = 0;
            s.service = ServiceTable::defaults().lookup(s.five_tuple.dst_port, s.five_tuple.protocol);
            ls.label = ClassLabel::abnormal(category);
        }
        s.direction = direction_of(s.five_tuple.src_addr, s.five_tuple.dst_addr, local);
        s.duration_s = std::round(s.duration_s * 1e6) / 1e6;
        out.push_back(std::move(ls));
    }
    return out;
}

Dataset synth_separable(std::size_t per_class, std::size_t dim, double sigma, std::uint64_t seed) {
    if (dim < 1) throw Error("synth_separable: dim must be >= 1");
    Draw d(derive_seed(seed, "separable"));
    Dataset data(dim, "synthetic");
    std::vector<double> row(dim);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool abnormal = i % 2 == 1;
        row[0] = (abnormal ? 0.75 : 0.25) + sigma * d.normal();
        for (std::size_t f = 1; f < dim; ++f) row[f] = d.unit();
        data.add(row, abnormal ? Label::Abnormal : Label::Normal);
    }
    return data;
}

}  // namespace nids

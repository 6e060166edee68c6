#include "nids/host_window.hpp"

namespace nids {

HostWindow::HostWindow(std::size_t capacity, bool include_current)
    : capacity_(capacity), include_current_(include_current) {
    if (capacity_ == 0) throw ConfigError("host window capacity must be >= 1");
}

HostFeatures HostWindow::update_and_extract(const SessionRecord& s) {
    auto& window = per_dst_[s.five_tuple.dst_addr];
    const Summary current{s.five_tuple.src_addr, s.five_tuple.src_port, s.service,
                          is_syn_error(s.conn_state)};

    auto append = [&] {
        window.push_back(current);
        if (window.size() > capacity_) window.pop_front();
    };
    if (include_current_) append();

    HostFeatures f;
    for (const Summary& prior : window) {
        if (prior.src_addr == current.src_addr) {
            ++f.dst_host_count;
            if (prior.src_port == current.src_port) ++f.dst_host_same_src_port_count;
            if (prior.syn_error) ++f.dst_host_serror_count;
        }
        if (prior.service == current.service) {
            ++f.dst_host_srv_count;
            if (prior.syn_error) ++f.dst_host_srv_serror_count;
        }
    }

    if (!include_current_) append();
    ++total_;
    return f;
}

}  // namespace nids

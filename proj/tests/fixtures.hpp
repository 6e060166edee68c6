#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nids/dataset.hpp"
#include "nids/host_window.hpp"

namespace nids::test {

inline FullFeatureRecord golden_record() {
    FullFeatureRecord r;
    auto& s = r.session;
    s.session_id = 42;
    s.timestamp_ms = 1421884800123;
    s.duration_s = 1.5;
    s.five_tuple = {IpAddress::parse("10.0.0.5"), 40000, IpAddress::parse("192.168.1.20"), 80, Protocol::TCP};
    s.service = ServiceType::http();
    s.conn_state = ConnState::SF;
    s.direction = Direction::L2L;
    s.src_packets = 6;
    s.src_bytes = 300;
    s.src_ip_bytes = 540;
    s.dst_packets = 4;
    s.dst_bytes = 1200;
    s.dst_ip_bytes = 1360;
    r.host = {3, 2, 1, 7, 0};
    return r;
}

// Frozen encoding of golden_record().
constexpr const char* kGoldenHex =
    "162dae9887bd4aaf4154f6f181efe152000000000000f83f0831302e302e302e3580f1040c3139322e3136382e312e3230a00100046874747008000cd804b80808e012a0150604020e00";

inline std::string hex(const std::vector<std::uint8_t>& b) {
    static const char* d = "0123456789abcdef";
    std::string s;
    for (auto c : b) {
        s += d[c >> 4];
        s += d[c & 15];
    }
    return s;
}

// Sorts every distance, then applies the weighting.
inline Prediction knn_oracle(const Dataset& train, std::span<const double> q, std::size_t k, bool weighted) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < train.size(); ++i) {
        double s = 0.0;
        for (std::size_t f = 0; f < train.dim; ++f) s += (train.row(i)[f] - q[f]) * (train.row(i)[f] - q[f]);
        all.emplace_back(std::sqrt(s), i);
    }
    std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.first < b.first; });
    double total = 0.0, abn = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double w = weighted ? 1.0 / (all[j].first + 1e-12) : 1.0;
        total += w;
        if (train.labels[all[j].second] == Label::Abnormal) abn += w;
    }
    const double score = abn / total;
    return {score > 0.5 ? Label::Abnormal : Label::Normal, score};
}

}  // namespace nids::test

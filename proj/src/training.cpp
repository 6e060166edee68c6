#include "nids/training.hpp"

namespace nids {

std::vector<FullFeatureRecord> extract_host_features(std::span<const SessionRecord> sessions,
                                                     std::size_t window_capacity, bool include_current) {
    HostWindow window(window_capacity, include_current);
    std::vector<FullFeatureRecord> out;
    out.reserve(sessions.size());
    for (const auto& s : sessions) out.push_back({s, window.update_and_extract(s)});
    return out;
}

Dataset encode_dataset(std::span<const FullFeatureRecord> records, std::span<const Label> labels,
                       const NormalizationSpec& spec) {
    if (records.size() != labels.size()) throw Error("encode_dataset: records and labels differ in length");
    Dataset data(spec.dimension(), spec.fingerprint());
    data.values.resize(records.size() * data.dim);
    data.labels.assign(labels.begin(), labels.end());
    for (std::size_t i = 0; i < records.size(); ++i) {
        strip_and_encode(records[i], spec, std::span<double>(data.values.data() + i * data.dim, data.dim));
    }
    return data;
}

std::vector<SessionRecord> sessions_of(const std::vector<LabeledSession>& labeled) {
    std::vector<SessionRecord> out;
    out.reserve(labeled.size());
    for (const auto& l : labeled) out.push_back(l.session);
    return out;
}

PreparedData prepare_training(const std::vector<LabeledSession>& sessions, std::size_t window_capacity,
                              bool include_current) {
    std::vector<Label> labels;
    labels.reserve(sessions.size());
    for (const auto& s : sessions) {
        if (!s.label) throw Error("session " + std::to_string(s.session.session_id) + " has no label");
        labels.push_back(s.label->label);
    }
    PreparedData out;
    const auto plain = sessions_of(sessions);
    out.records = extract_host_features(plain, window_capacity, include_current);
    out.spec = fit_normalization(out.records);
    out.data = encode_dataset(out.records, labels, out.spec);
    return out;
}

}  // namespace nids

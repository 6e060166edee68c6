#include "doctest.h"

#include <cmath>
#include <limits>

#include "nids/host_window.hpp"
#include "nids/normalization.hpp"
#include "nids/training.hpp"
#include "support.hpp"

using namespace nids;

namespace {

SessionRecord http_session(std::uint64_t id) {
    SessionRecord s;
    s.session_id = id;
    s.five_tuple = {IpAddress::parse("10.0.0.1"), 1234, IpAddress::parse("10.0.0.2"), 80, Protocol::TCP};
    s.service = ServiceType::http();
    s.conn_state = ConnState::SF;
    return s;
}

std::size_t index_of(const NormalizationSpec& spec, const std::string& name) {
    const auto layout = spec.layout();
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (layout[i] == name) return i;
    }
    FAIL("no component " << name);
    return 0;
}

}  // namespace

TEST_SUITE("feature_pipeline") {

TEST_CASE("first session has empty counts") {
    HostWindow w;
    CHECK(w.update_and_extract(http_session(1)) == HostFeatures{});
}

TEST_CASE("window saturates at 100") {
    HostWindow w;
    for (std::uint64_t i = 0; i < 150; ++i) w.update_and_extract(http_session(i));
    const auto f = w.update_and_extract(http_session(150));
    CHECK(f.dst_host_count == 100);
    CHECK(f.dst_host_same_src_port_count == 100);
    CHECK(f.dst_host_serror_count == 0);
    CHECK(f.dst_host_srv_count == 100);
    CHECK(f.dst_host_srv_serror_count == 0);
}

TEST_CASE("include_current counts the session itself") {
    HostWindow w(100, true);
    const auto f = w.update_and_extract(http_session(1));
    CHECK(f.dst_host_count == 1);
    CHECK(f.dst_host_srv_count == 1);
}

TEST_CASE("streaming window equals brute force") {
    Rng rng(21);
    std::vector<SessionRecord> sessions;
    for (std::uint64_t i = 0; i < 3000; ++i) sessions.push_back(test::random_session(rng, 7, i));
    const auto expected = test::brute_force_host_features(sessions);
    HostWindow w;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const auto got = w.update_and_extract(sessions[i]);
        REQUIRE(got == expected[i]);
        CHECK(got.dst_host_same_src_port_count <= got.dst_host_count);
        CHECK(got.dst_host_serror_count <= got.dst_host_count);
        CHECK(got.dst_host_srv_serror_count <= got.dst_host_srv_count);
        CHECK(got.dst_host_srv_count <= 100);
    }
}

TEST_CASE("small capacity matches brute force") {
    Rng rng(22);
    std::vector<SessionRecord> sessions;
    for (std::uint64_t i = 0; i < 500; ++i) sessions.push_back(test::random_session(rng, 3, i));
    const auto expected = test::brute_force_host_features(sessions, 5);
    HostWindow w(5);
    for (std::size_t i = 0; i < sessions.size(); ++i) REQUIRE(w.update_and_extract(sessions[i]) == expected[i]);
}

TEST_CASE("zero capacity is a configuration error") { CHECK_THROWS_AS(HostWindow(0), ConfigError); }

TEST_CASE("fit_normalization maxima") {
    std::vector<FullFeatureRecord> train(3);
    train[0].session.duration_s = 3.0;
    train[1].session.duration_s = 12.5;
    train[2].session.duration_s = 0.5;
    train[1].session.src_bytes = 700;
    train[1].session.src_ip_bytes = 900;
    const auto spec = fit_normalization(train);
    CHECK(spec.maxima[static_cast<std::size_t>(NumericFeature::Duration)] == 12.5);
    CHECK(spec.maxima[static_cast<std::size_t>(NumericFeature::DstBytes)] == 1.0);
    CHECK(spec.maxima[static_cast<std::size_t>(NumericFeature::SrcPort)] == 65535.0);
    CHECK(spec.maxima[static_cast<std::size_t>(NumericFeature::DstPort)] == 65535.0);
    CHECK(spec.maxima[static_cast<std::size_t>(NumericFeature::DstHostCount)] == 100.0);
    CHECK(spec.maxima[static_cast<std::size_t>(NumericFeature::SrcIpBytes)] == 900.0);
    CHECK(spec.services.back() == NormalizationSpec::kUnseen);
    CHECK_THROWS_AS(fit_normalization({}), Error);
}

TEST_CASE("encoding examples") {
    std::vector<FullFeatureRecord> train(1);
    train[0].session.duration_s = 12.5;
    train[0].session.service = ServiceType::http();
    const auto spec = fit_normalization(train);

    FullFeatureRecord r;
    r.session.five_tuple.src_port = 65535;
    r.session.duration_s = 20.0;
    r.host.dst_host_count = 47;
    r.session.service = ServiceType::ssh();  // unseen
    const auto v = strip_and_encode(r, spec);
    REQUIRE(v.size() == spec.dimension());
    CHECK(v[index_of(spec, "source_port_number")] == 1.0);
    CHECK(v[index_of(spec, "duration")] == 1.0);
    CHECK(v[index_of(spec, "dst_host_count")] == 0.47);
    CHECK(v[index_of(spec, "service_type=<other>")] == 1.0);
    CHECK(v[index_of(spec, "service_type=http")] == 0.0);
}

TEST_CASE("layout drops timestamp and addresses") {
    std::vector<FullFeatureRecord> train(1);
    const auto spec = fit_normalization(train);
    for (const auto& name : spec.layout()) {
        CHECK(name.find("timestamp") == std::string::npos);
        CHECK(name.find("ip_address") == std::string::npos);
    }
    CHECK(spec.layout().size() == spec.dimension());
}

TEST_CASE("encoding is deterministic and bounded") {
    Rng rng(3);
    std::vector<FullFeatureRecord> train;
    for (int i = 0; i < 200; ++i) train.push_back(test::random_full_record(rng));
    const auto spec = fit_normalization(train);
    CHECK(spec == fit_normalization(train));
    CHECK(spec.fingerprint() == fit_normalization(train).fingerprint());

    for (int i = 0; i < 2000; ++i) {
        auto r = test::random_full_record(rng);
        // adversarial magnitudes
        r.session.duration_s = i % 7 == 0 ? 1e300 : r.session.duration_s * 1000;
        r.session.dst_bytes = i % 5 == 0 ? UINT64_MAX : r.session.dst_bytes;
        r.host.dst_host_count = i % 3 == 0 ? 1000 : r.host.dst_host_count;
        const auto a = strip_and_encode(r, spec);
        CHECK(a == strip_and_encode(r, spec));
        for (double x : a) {
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
}

TEST_CASE("NaN duration encodes inside the unit interval") {
    std::vector<FullFeatureRecord> train(1);
    train[0].session.duration_s = 1.0;
    const auto spec = fit_normalization(train);
    FullFeatureRecord r;
    r.session.duration_s = std::numeric_limits<double>::quiet_NaN();
    const auto v = strip_and_encode(r, spec);
    const double d = v[index_of(spec, "duration")];
    CHECK(d >= 0.0);
    CHECK(d <= 1.0);
}

TEST_CASE("spec JSON round trip and schema gate") {
    Rng rng(4);
    std::vector<FullFeatureRecord> train;
    for (int i = 0; i < 50; ++i) train.push_back(test::random_full_record(rng));
    const auto spec = fit_normalization(train);
    const auto back = NormalizationSpec::from_json(nlohmann::json::parse(spec.to_json().dump()));
    CHECK(back == spec);
    CHECK(back.fingerprint() == spec.fingerprint());

    auto j = nlohmann::json::parse(spec.to_json().dump());
    j["schema_version"] = 99;
    CHECK_THROWS_AS(NormalizationSpec::from_json(j), ParseError);
}

TEST_CASE("extract_host_features matches the window") {
    Rng rng(8);
    std::vector<SessionRecord> sessions;
    for (std::uint64_t i = 0; i < 400; ++i) sessions.push_back(test::random_session(rng, 4, i));
    const auto records = extract_host_features(sessions);
    const auto expected = test::brute_force_host_features(sessions);
    REQUIRE(records.size() == sessions.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].session == sessions[i]);
        CHECK(records[i].host == expected[i]);
    }
}

}  // TEST_SUITE

#include "doctest.h"

#include <sstream>

#include "nids/core_model.hpp"
#include "nids/session_log.hpp"
#include "support.hpp"

using namespace nids;

TEST_SUITE("core_model") {

TEST_CASE("direction_of follows local membership") {
    const std::vector<std::string> prefixes{"10.0.0.0/8"};
    const LocalNetworks local(prefixes);
    CHECK(direction_of(IpAddress::parse("10.0.0.5"), IpAddress::parse("10.0.0.9"), local) == Direction::L2L);
    CHECK(direction_of(IpAddress::parse("10.0.0.5"), IpAddress::parse("8.8.8.8"), local) == Direction::L2R);
    CHECK(direction_of(IpAddress::parse("8.8.8.8"), IpAddress::parse("10.1.2.3"), local) == Direction::R2L);
    CHECK(direction_of(IpAddress::parse("8.8.8.8"), IpAddress::parse("9.9.9.9"), local) == Direction::R2R);
}

TEST_CASE("malformed prefixes are rejected when the prefix set is built") {
    CHECK_THROWS_AS(Prefix::parse("10.0.0.0/33"), ConfigError);
    CHECK_THROWS_AS(Prefix::parse("10.0.0/8"), ConfigError);
    CHECK_THROWS_AS(Prefix::parse("banana"), ConfigError);
    const std::vector<std::string> none;
    CHECK_THROWS_AS(LocalNetworks{none}, ConfigError);
}

TEST_CASE("ipv6 prefixes") {
    const std::vector<std::string> prefixes{"fd00::/8"};
    const LocalNetworks local(prefixes);
    CHECK(local.is_local(IpAddress::parse("fd12::1")));
    CHECK_FALSE(local.is_local(IpAddress::parse("2001:db8::1")));
    CHECK_FALSE(local.is_local(IpAddress::parse("10.0.0.1")));
}

TEST_CASE("address text round trip") {
    for (const char* text : {"0.0.0.0", "10.0.0.5", "255.255.255.255", "2001:db8::1", "::1"}) {
        CHECK(IpAddress::parse(IpAddress::parse(text).to_string()) == IpAddress::parse(text));
    }
    CHECK(IpAddress::parse("192.168.1.20").to_string() == "192.168.1.20");
    CHECK_FALSE(IpAddress::try_parse("256.1.1.1").has_value());
    CHECK_FALSE(IpAddress::try_parse("1.2.3").has_value());
    CHECK_THROWS_AS(IpAddress::parse("x"), ParseError);
}

TEST_CASE("service_of default table") {
    const auto table = ServiceTable::defaults();
    CHECK(service_of(80, Protocol::TCP, table) == ServiceType::http());
    CHECK(service_of(53, Protocol::UDP, table) == ServiceType::dns());
    CHECK(service_of(49152, Protocol::TCP, table) == ServiceType::other());
    CHECK(service_of(80, Protocol::ICMP, table) == ServiceType::other());
}

TEST_CASE("configured service entries") {
    auto table = ServiceTable::defaults();
    table.set(8080, Protocol::TCP, ServiceType("http-alt"));
    CHECK(service_of(8080, Protocol::TCP, table).name() == "http-alt");
    CHECK(service_of(8080, Protocol::UDP, table).is_other());
}

TEST_CASE("SYN-error set is S0..S3") {
    for (ConnState s : kAllConnStates) {
        const bool expected = s == ConnState::S0 || s == ConnState::S1 || s == ConnState::S2 || s == ConnState::S3;
        CHECK(is_syn_error(s) == expected);
    }
}

TEST_CASE("enum names parse back") {
    for (auto p : kAllProtocols) CHECK(parse_protocol(to_string(p)) == p);
    for (auto s : kAllConnStates) CHECK(parse_conn_state(to_string(s)) == s);
    for (auto d : kAllDirections) CHECK(parse_direction(to_string(d)) == d);
    CHECK(parse_protocol("6") == Protocol::TCP);
    CHECK(parse_protocol("17") == Protocol::UDP);
    CHECK_FALSE(parse_conn_state("XX").has_value());
}

TEST_CASE("record invariants") {
    SessionRecord s;
    s.src_bytes = 10;
    s.src_ip_bytes = 5;
    CHECK_THROWS_AS(validate(s), Error);
    s.src_ip_bytes = 50;
    CHECK_NOTHROW(validate(s));
    s.duration_s = -1;
    CHECK_THROWS_AS(validate(s), Error);
}

TEST_CASE("session log round trip is field-for-field") {
    Rng rng(11);
    std::vector<LabeledSession> sessions;
    for (std::uint64_t i = 0; i < 500; ++i) {
        LabeledSession ls{test::random_session(rng, 20, i + 1), std::nullopt};
        if (i % 3 == 1) ls.label = ClassLabel::normal();
        if (i % 3 == 2) ls.label = ClassLabel::abnormal(i % 2 ? std::optional<std::string>("Exploits") : std::nullopt);
        sessions.push_back(ls);
    }
    std::stringstream ss;
    write_session_log(ss, sessions);
    const auto back = read_session_log(ss);
    REQUIRE(back.size() == sessions.size());
    for (std::size_t i = 0; i < sessions.size(); ++i) CHECK(back[i] == sessions[i]);
}

TEST_CASE("session log reports the bad line") {
    std::stringstream ss("\n{\"session_id\": 1}\n");
    try {
        read_session_log(ss);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

}  // TEST_SUITE

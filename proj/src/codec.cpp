#include "nids/codec.hpp"

#include <bit>
#include <cstring>

#include "nids/util.hpp"

namespace nids {

std::uint64_t CodecSchema::fingerprint() const {
    std::uint64_t h = fnv1a64(name);
    for (const auto& f : fields) {
        h = fnv1a64(f.name, h);
        const char t = static_cast<char>('0' + static_cast<int>(f.type));
        h = fnv1a64(std::string_view(&t, 1), h);
    }
    return h;
}

const CodecSchema& CodecSchema::full_feature() {
    static const CodecSchema schema{
        "nids.FullFeatureRecord.v1",
        {
            {"session_id", FieldType::Long},
            {"timestamp_ms", FieldType::Long},
            {"duration_s", FieldType::Double},
            {"src_addr", FieldType::String},
            {"src_port", FieldType::Int},
            {"dst_addr", FieldType::String},
            {"dst_port", FieldType::Int},
            {"protocol", FieldType::Enum},
            {"service", FieldType::String},
            {"conn_state", FieldType::Enum},
            {"direction", FieldType::Enum},
            {"src_packets", FieldType::Long},
            {"src_bytes", FieldType::Long},
            {"src_ip_bytes", FieldType::Long},
            {"dst_packets", FieldType::Long},
            {"dst_bytes", FieldType::Long},
            {"dst_ip_bytes", FieldType::Long},
            {"dst_host_count", FieldType::Int},
            {"dst_host_same_src_port_count", FieldType::Int},
            {"dst_host_serror_count", FieldType::Int},
            {"dst_host_srv_count", FieldType::Int},
            {"dst_host_srv_serror_count", FieldType::Int},
        }};
    return schema;
}

void write_varint(std::uint64_t v, std::vector<std::uint8_t>& out) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

namespace {

void put_long(std::int64_t v, std::vector<std::uint8_t>& out) { write_varint(zigzag(v), out); }

void put_double(double v, std::vector<std::uint8_t>& out) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

void put_string(const std::string& s, std::vector<std::uint8_t>& out) {
    write_varint(s.size(), out);
    out.insert(out.end(), s.begin(), s.end());
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const std::uint8_t byte = take();
            v |= static_cast<std::uint64_t>(byte & 0x7f) << shift;
            if (!(byte & 0x80)) return v;
        }
        throw CodecError("codec: varint too long");
    }
    std::int64_t slong() { return unzigzag(varint()); }
    double real() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return std::bit_cast<double>(bits);
    }
    std::string str() {
        const std::uint64_t n = varint();
        need(n);
        std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint64_t fixed64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::size_t remaining() const { return b_.size() - pos_; }

private:
    std::uint8_t take() {
        need(1);
        return b_[pos_++];
    }
    void need(std::uint64_t n) const {
        if (n > b_.size() - pos_) throw CodecError("codec: truncated record");
    }

    std::span<const std::uint8_t> b_;
    std::size_t pos_ = 0;
};

template <typename E, std::size_t N>
E enum_at(std::int64_t i, const std::array<E, N>& all, const char* what) {
    if (i < 0 || static_cast<std::size_t>(i) >= N) throw CodecError(std::string("codec: bad ") + what);
    return all[static_cast<std::size_t>(i)];
}

std::uint16_t port(std::int64_t v) {
    if (v < 0 || v > 65535) throw CodecError("codec: port out of range");
    return static_cast<std::uint16_t>(v);
}

std::uint32_t count32(std::int64_t v) {
    if (v < 0 || v > static_cast<std::int64_t>(UINT32_MAX)) throw CodecError("codec: count out of range");
    return static_cast<std::uint32_t>(v);
}

IpAddress address(const std::string& s) {
    auto a = IpAddress::try_parse(s);
    if (!a) throw CodecError("codec: bad address");
    return *a;
}

void check_schema(const CodecSchema& schema) {
    if (schema.fields != CodecSchema::full_feature().fields) {
        throw SchemaMismatchError("codec: schema layout is not supported");
    }
}

}  // namespace

void encode_record(const FullFeatureRecord& r, std::vector<std::uint8_t>& out, const CodecSchema& schema) {
    check_schema(schema);
    const auto& s = r.session;
    std::vector<std::uint8_t> body;
    body.reserve(96);
    put_long(static_cast<std::int64_t>(s.session_id), body);
    put_long(s.timestamp_ms, body);
    put_double(s.duration_s, body);
    put_string(s.five_tuple.src_addr.to_string(), body);
    put_long(s.five_tuple.src_port, body);
    put_string(s.five_tuple.dst_addr.to_string(), body);
    put_long(s.five_tuple.dst_port, body);
    put_long(static_cast<std::int64_t>(s.five_tuple.protocol), body);
    put_string(s.service.name(), body);
    put_long(static_cast<std::int64_t>(s.conn_state), body);
    put_long(static_cast<std::int64_t>(s.direction), body);
    put_long(static_cast<std::int64_t>(s.src_packets), body);
    put_long(static_cast<std::int64_t>(s.src_bytes), body);
    put_long(static_cast<std::int64_t>(s.src_ip_bytes), body);
    put_long(static_cast<std::int64_t>(s.dst_packets), body);
    put_long(static_cast<std::int64_t>(s.dst_bytes), body);
    put_long(static_cast<std::int64_t>(s.dst_ip_bytes), body);
    put_long(r.host.dst_host_count, body);
    put_long(r.host.dst_host_same_src_port_count, body);
    put_long(r.host.dst_host_serror_count, body);
    put_long(r.host.dst_host_srv_count, body);
    put_long(r.host.dst_host_srv_serror_count, body);

    const std::uint64_t fp = schema.fingerprint();
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(fp >> (8 * i)));
    write_varint(body.size(), out);
    out.insert(out.end(), body.begin(), body.end());
}

std::vector<std::uint8_t> encode_record(const FullFeatureRecord& record, const CodecSchema& schema) {
    std::vector<std::uint8_t> out;
    encode_record(record, out, schema);
    return out;
}

FullFeatureRecord decode_record(std::span<const std::uint8_t> bytes, const CodecSchema& schema) {
    Reader head(bytes);
    if (head.fixed64() != schema.fingerprint()) {
        throw SchemaMismatchError("codec: schema fingerprint mismatch");
    }
    check_schema(schema);
    const std::uint64_t len = head.varint();
    if (len != head.remaining()) {
        throw CodecError(len > head.remaining() ? "codec: truncated record" : "codec: trailing bytes");
    }
    Reader in(bytes.subspan(bytes.size() - len));

    FullFeatureRecord r;
    auto& s = r.session;
    s.session_id = static_cast<std::uint64_t>(in.slong());
    s.timestamp_ms = in.slong();
    s.duration_s = in.real();
    s.five_tuple.src_addr = address(in.str());
    s.five_tuple.src_port = port(in.slong());
    s.five_tuple.dst_addr = address(in.str());
    s.five_tuple.dst_port = port(in.slong());
    s.five_tuple.protocol = enum_at(in.slong(), kAllProtocols, "protocol");
    s.service = ServiceType(in.str());
    s.conn_state = enum_at(in.slong(), kAllConnStates, "conn_state");
    s.direction = enum_at(in.slong(), kAllDirections, "direction");
    s.src_packets = static_cast<std::uint64_t>(in.slong());
    s.src_bytes = static_cast<std::uint64_t>(in.slong());
    s.src_ip_bytes = static_cast<std::uint64_t>(in.slong());
    s.dst_packets = static_cast<std::uint64_t>(in.slong());
    s.dst_bytes = static_cast<std::uint64_t>(in.slong());
    s.dst_ip_bytes = static_cast<std::uint64_t>(in.slong());
    r.host.dst_host_count = count32(in.slong());
    r.host.dst_host_same_src_port_count = count32(in.slong());
    r.host.dst_host_serror_count = count32(in.slong());
    r.host.dst_host_srv_count = count32(in.slong());
    r.host.dst_host_srv_serror_count = count32(in.slong());
    if (in.remaining() != 0) throw CodecError("codec: trailing bytes in body");
    return r;
}

}  // namespace nids

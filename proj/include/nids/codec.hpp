#pragma once

// Binary record format between the feature stage and the classifiers.
//
// Layout: 8-byte schema fingerprint (little-endian u64), varint body length,
// then the body with fields in schema order. Integers are zigzag varints,
// strings are a varint byte length followed by UTF-8, reals are IEEE-754
// binary64 little-endian, enums are their zigzag-encoded index.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nids/host_window.hpp"

namespace nids {

class CodecError : public ParseError {
public:
    using ParseError::ParseError;
};

class SchemaMismatchError : public CodecError {
public:
    using CodecError::CodecError;
};

enum class FieldType : std::uint8_t { Long, Int, Double, String, Enum };

struct CodecField {
    std::string name;
    FieldType type;
    bool operator==(const CodecField&) const = default;
};

struct CodecSchema {
    std::string name;
    std::vector<CodecField> fields;

    /// FNV-1a over the name and the ordered (field, type) list.
    std::uint64_t fingerprint() const;

    /// The FullFeatureRecord layout.
    static const CodecSchema& full_feature();
};

std::vector<std::uint8_t> encode_record(const FullFeatureRecord& record,
                                        const CodecSchema& schema = CodecSchema::full_feature());
/// Appends to out.
void encode_record(const FullFeatureRecord& record, std::vector<std::uint8_t>& out,
                   const CodecSchema& schema = CodecSchema::full_feature());

/// Throws SchemaMismatchError on a foreign fingerprint and CodecError on
/// truncated, oversized or out-of-range input.
FullFeatureRecord decode_record(std::span<const std::uint8_t> bytes,
                                const CodecSchema& schema = CodecSchema::full_feature());

void write_varint(std::uint64_t v, std::vector<std::uint8_t>& out);
inline std::uint64_t zigzag(std::int64_t v) {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}
inline std::int64_t unzigzag(std::uint64_t v) {
    return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

}  // namespace nids

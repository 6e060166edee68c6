#include "nids/util.hpp"

#include <fmt/format.h>

namespace nids {

std::string to_hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace nids

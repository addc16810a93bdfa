#pragma once

#include <cstdint>
#include <string>

namespace reaccel {

/// FNV-1a 64-bit content digest, printed as 16 hex digits. Used to tie plans
/// and reports to the exact case document and flags they were produced from.
inline std::string fnv1a_digest(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace reaccel

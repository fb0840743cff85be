#include "edgeloc/digest.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

#include "edgeloc/errors.hpp"

namespace edgeloc {

uint64_t fnv1a64(const void* data, size_t size, uint64_t state) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < size; ++i) {
        state ^= p[i];
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::string fnv1a64_hex(const void* data, size_t size) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data, size)));
    return std::string(buf);
}

std::string fnv1a64_hex(const std::string& s) { return fnv1a64_hex(s.data(), s.size()); }

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open file: " + path);
    uint64_t state = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        std::streamsize got = in.gcount();
        if (got > 0) state = fnv1a64(buf.data(), static_cast<size_t>(got), state);
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(state));
    return std::string(out);
}

}  // namespace edgeloc

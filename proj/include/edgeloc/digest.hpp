#pragma once

#include <cstdint>
#include <cstddef>
#include <string>

namespace edgeloc {

// FNV-1a 64-bit. Provenance fingerprinting only (model/index/config
// pairing checks), not security.
uint64_t fnv1a64(const void* data, size_t size, uint64_t state = 0xcbf29ce484222325ULL);
std::string fnv1a64_hex(const void* data, size_t size);
std::string fnv1a64_hex(const std::string& s);

// Digest of a whole file's bytes. Throws Error(io) if unreadable.
std::string file_digest(const std::string& path);

}  // namespace edgeloc

#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "edgeloc/errors.hpp"

namespace edgeloc {

/// Little-endian binary writer for model and index files.
class BinWriter {
  public:
    explicit BinWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
        if (!out_) fail(ErrorCategory::io, "cannot write " + path);
    }
    void bytes(const void* data, size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    }
    void u8(uint8_t v) { bytes(&v, 1); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void u64(uint64_t v) { bytes(&v, 8); }
    void f32(float v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f32_block(const std::vector<double>& v) {
        for (double d : v) f32(static_cast<float>(d));
    }
    void close() {
        out_.close();
        if (!out_) fail(ErrorCategory::io, "cannot write " + path_);
    }

  private:
    std::string path_;
    std::ofstream out_;
};

class BinReader {
  public:
    explicit BinReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
        if (!in_) fail(ErrorCategory::io, "cannot read " + path);
    }
    void bytes(void* data, size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (in_.gcount() != static_cast<std::streamsize>(n))
            fail(ErrorCategory::format, "truncated file: " + path_);
    }
    uint8_t u8() {
        uint8_t v;
        bytes(&v, 1);
        return v;
    }
    uint32_t u32() {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    uint64_t u64() {
        uint64_t v;
        bytes(&v, 8);
        return v;
    }
    float f32() {
        float v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::vector<double> f32_block(size_t n) {
        std::vector<float> raw(n);
        if (n) bytes(raw.data(), n * 4);
        return std::vector<double>(raw.begin(), raw.end());
    }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ifstream in_;
};

}  // namespace edgeloc

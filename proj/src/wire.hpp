#pragma once

// Little-endian byte serialization used by the checkpoint container.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "snnconv/errors.hpp"

namespace snnconv::wire {

struct Writer {
    std::vector<uint8_t> bytes;

    void u8(uint8_t v) { bytes.push_back(v); }
    void u32(uint32_t v) {
        bytes.push_back(uint8_t(v));
        bytes.push_back(uint8_t(v >> 8));
        bytes.push_back(uint8_t(v >> 16));
        bytes.push_back(uint8_t(v >> 24));
    }
    void f32(float v) { u32(std::bit_cast<uint32_t>(v)); }
    void str(const char* s) {
        while (*s) bytes.push_back(uint8_t(*s++));
    }
};

struct Reader {
    const uint8_t* data;
    size_t size;
    size_t pos = 0;

    void need(size_t n) const {
        if (pos + n > size) throw CheckpointError("truncated checkpoint");
    }
    uint8_t u8() {
        need(1);
        return data[pos++];
    }
    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(data[pos]) | (uint32_t(data[pos + 1]) << 8) |
                     (uint32_t(data[pos + 2]) << 16) | (uint32_t(data[pos + 3]) << 24);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::string str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
    bool exhausted() const { return pos == size; }
};

}  // namespace snnconv::wire

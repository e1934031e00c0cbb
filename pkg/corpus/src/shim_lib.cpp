// In-process shim: one entry point taking a framed request buffer and
// returning a malloc'd framed response buffer (caller frees via mudep_free).

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <string>

#include "corpus.hpp"

extern "C" {

uint8_t* mudep_exec(const char* buf, size_t len, size_t* out_len) {
    corpus::json response;
    try {
        if (len < 4) throw std::runtime_error("frame shorter than its header");
        const auto* b = reinterpret_cast<const unsigned char*>(buf);
        const uint32_t n = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
        if (4 + static_cast<size_t>(n) > len) throw std::runtime_error("truncated frame");
        const auto request = corpus::json::parse(buf + 4, buf + 4 + n);
        response = corpus::dispatch(request);
    } catch (const std::exception& e) {
        response = {{"status", "fault"}, {"log", std::string("malformed request: ") + e.what()}};
    }
    const std::string frame = corpus::encode_frame(response);
    auto* out = static_cast<uint8_t*>(std::malloc(frame.size()));
    if (out == nullptr) {
        *out_len = 0;
        return nullptr;
    }
    std::memcpy(out, frame.data(), frame.size());
    *out_len = frame.size();
    return out;
}

void mudep_free(uint8_t* buf) { std::free(buf); }

}  // extern "C"

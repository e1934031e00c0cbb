// Standalone subprocess shim: length-prefixed JSON frames on stdin/stdout.
// Malformed payloads answer a fault frame and the loop keeps serving;
// a broken length header is unrecoverable and ends the process.

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "corpus.hpp"

namespace {

constexpr uint32_t kMaxFrame = 64u * 1024u * 1024u;

bool read_exact(std::FILE* in, void* buf, size_t n) {
    return std::fread(buf, 1, n, in) == n;
}

void write_frame(const corpus::json& doc) {
    const std::string frame = corpus::encode_frame(doc);
    std::fwrite(frame.data(), 1, frame.size(), stdout);
    std::fflush(stdout);
}

}  // namespace

int main() {
    for (;;) {
        unsigned char header[4];
        if (!read_exact(stdin, header, 4)) return 0;
        const uint32_t n = static_cast<uint32_t>(header[0]) |
                           (static_cast<uint32_t>(header[1]) << 8) |
                           (static_cast<uint32_t>(header[2]) << 16) |
                           (static_cast<uint32_t>(header[3]) << 24);
        if (n > kMaxFrame) {
            write_frame({{"status", "fault"}, {"log", "oversized frame"}});
            return 2;
        }
        std::vector<char> body(n);
        if (!read_exact(stdin, body.data(), n)) return 0;
        corpus::json response;
        try {
            const auto request = corpus::json::parse(body.begin(), body.end());
            response = corpus::dispatch(request);
        } catch (const std::exception& e) {
            response = {{"status", "fault"}, {"log", std::string("malformed request: ") + e.what()}};
        }
        write_frame(response);
    }
}

#include "pass/tls.hpp"

namespace pass::tls {

namespace {

std::uint32_t be24(ByteView b, std::size_t at) {
    return std::uint32_t{b[at]} << 16 | std::uint32_t{b[at + 1]} << 8 | b[at + 2];
}

constexpr std::size_t kMaxRecord = (1u << 14) + 2048;

}  // namespace

std::optional<Bytes> first_certificate(ByteView stream) {
    Bytes handshake;
    std::size_t pos = 0;
    while (pos + 5 <= stream.size()) {
        const std::uint8_t type = stream[pos];
        const std::uint8_t major = stream[pos + 1];
        const std::size_t len = std::size_t{stream[pos + 3]} << 8 | stream[pos + 4];
        if (major != 3 || len > kMaxRecord) break;
        if (type != kContentHandshake) break;
        if (pos + 5 + len > stream.size()) {
            // Partial trailing record: keep what we have.
            handshake.insert(handshake.end(), stream.begin() + pos + 5, stream.end());
            break;
        }
        handshake.insert(handshake.end(), stream.begin() + pos + 5, stream.begin() + pos + 5 + len);
        pos += 5 + len;
    }

    const ByteView hs{handshake};
    std::size_t at = 0;
    while (at + 4 <= hs.size()) {
        const std::uint8_t msg_type = hs[at];
        const std::size_t msg_len = be24(hs, at + 1);
        const std::size_t body = at + 4;
        if (body + msg_len > hs.size()) return std::nullopt;
        if (msg_type == kHandshakeCertificate) {
            if (msg_len < 3) return std::nullopt;
            const std::size_t list_len = be24(hs, body);
            if (list_len + 3 > msg_len || list_len < 3) return std::nullopt;
            const std::size_t cert_len = be24(hs, body + 3);
            if (cert_len == 0 || cert_len + 3 > list_len) return std::nullopt;
            const auto first = hs.begin() + static_cast<std::ptrdiff_t>(body + 6);
            return Bytes(first, first + static_cast<std::ptrdiff_t>(cert_len));
        }
        at = body + msg_len;
    }
    return std::nullopt;
}

}  // namespace pass::tls

#pragma once

#include <optional>

#include "pass/common.hpp"

namespace pass::tls {

constexpr std::uint8_t kContentChangeCipherSpec = 20;
constexpr std::uint8_t kContentAlert = 21;
constexpr std::uint8_t kContentHandshake = 22;
constexpr std::uint8_t kContentApplicationData = 23;
constexpr std::uint8_t kHandshakeCertificate = 11;

// DER bytes of the first certificate in the first Certificate handshake
// message of a server byte stream. Parsing stops at the first record that is
// not a handshake record, so encrypted handshakes yield nullopt.
std::optional<Bytes> first_certificate(ByteView server_stream);

}  // namespace pass::tls

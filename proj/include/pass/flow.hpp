#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pass/common.hpp"

namespace pass {

constexpr std::uint8_t kProtoTcp = 6;

/// IPv4 or IPv6 address. IPv4 is stored in the first four bytes.
struct IpAddress {
    std::array<std::uint8_t, 16> bytes{};
    bool v6 = false;

    static IpAddress v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d);
    static IpAddress parse(const std::string& text);
    std::string to_string() const;
    ByteView view() const { return {bytes.data(), v6 ? 16u : 4u}; }

    auto operator<=>(const IpAddress&) const = default;
};

struct Endpoint {
    IpAddress ip;
    std::uint16_t port = 0;
    auto operator<=>(const Endpoint&) const = default;
};

/// Oriented five-tuple. Inside a Flow, src is the client.
struct FiveTuple {
    IpAddress src_ip;
    IpAddress dst_ip;
    std::uint16_t src_port = 0;
    std::uint16_t dst_port = 0;
    std::uint8_t protocol = kProtoTcp;

    Endpoint src() const { return {src_ip, src_port}; }
    Endpoint dst() const { return {dst_ip, dst_port}; }
    FiveTuple reversed() const { return {dst_ip, src_ip, dst_port, src_port, protocol}; }

    auto operator<=>(const FiveTuple&) const = default;
};

/// Orientation-free key: a tuple and its reversed twin map to the same key.
struct FlowKey {
    Endpoint low;
    Endpoint high;
    std::uint8_t protocol = kProtoTcp;
    auto operator<=>(const FlowKey&) const = default;
};
FlowKey flow_key(const FiveTuple& t);

enum class Direction : std::uint8_t { ClientToServer, ServerToClient };

struct Packet {
    Direction direction = Direction::ClientToServer;
    Bytes payload;                        // transport payload only, possibly truncated
    std::uint64_t capture_index = 0;      // position in the capture
    std::uint32_t payload_len = 0;        // true on-wire payload length
    bool operator==(const Packet&) const = default;
};

struct CommInfo {
    Endpoint dst;                                      // responder ip and port
    std::optional<std::string> tls_cert_fingerprint;   // sha256 hex of the leaf DER

    // Stable string form, used as the comm identity in token files.
    std::string key() const;
    bool operator==(const CommInfo&) const = default;
};

struct Flow {
    FiveTuple key;
    std::vector<Packet> packets;
    std::optional<ClassId> label;
    CommInfo comm;
    bool operator==(const Flow&) const = default;
};

}  // namespace pass

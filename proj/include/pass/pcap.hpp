#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pass/common.hpp"
#include "pass/flow.hpp"

namespace pass {

// Link-layer header types of the classic capture container.
enum class LinkType : std::uint32_t {
    Ethernet = 1,
    Raw = 101,
    LinuxSll = 113,
    Ipv4 = 228,
    Ipv6 = 229,
};

namespace tcp_flag {
constexpr std::uint8_t Fin = 0x01;
constexpr std::uint8_t Syn = 0x02;
constexpr std::uint8_t Rst = 0x04;
constexpr std::uint8_t Ack = 0x10;
}  // namespace tcp_flag

struct TcpSegment {
    FiveTuple tuple;             // oriented as sent on the wire
    std::uint8_t flags = 0;
    ByteView payload;            // captured payload bytes (may be shorter than payload_len)
    std::uint32_t payload_len = 0;
};

enum class FrameKind { Tcp, NonTcp, Malformed };

struct ParsedFrame {
    FrameKind kind = FrameKind::Malformed;
    TcpSegment segment;          // valid only for FrameKind::Tcp
};

/// Walks link, network and transport headers. The returned payload view
/// aliases `frame`.
ParsedFrame parse_frame(ByteView frame, LinkType link = LinkType::Ethernet);

/// Returns only the TCP payload of a frame, or nullopt when the frame does not
/// parse down to TCP.
std::optional<Bytes> filter_bias_bytes(ByteView frame, LinkType link = LinkType::Ethernet);

struct IngestStats {
    std::size_t records = 0;
    std::size_t tcp_packets = 0;
    std::size_t dropped_non_tcp = 0;
    std::size_t truncated_records = 0;
    std::size_t malformed_frames = 0;
};

struct IngestResult {
    std::vector<Flow> flows;
    IngestStats stats;
};

/// Splits a classic capture into bidirectional TCP flows in order of first
/// appearance. Payloads are kept whole so that certificate extraction sees
/// complete handshakes; CommInfo is filled for every flow.
/// Throws FormatError when the global header is malformed.
IngestResult reassemble_flows(ByteView capture);

/// Responder endpoint plus the SHA-256 of the first server certificate, when
/// a cleartext TLS Certificate message is present.
CommInfo extract_comm_info(const Flow& flow);

}  // namespace pass

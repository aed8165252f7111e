#include "pass/pcap.hpp"

#include <map>

#include "pass/tls.hpp"

namespace pass {

namespace {

std::uint16_t be16(ByteView b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] << 8 | b[at + 1]);
}

class Reader {
public:
    Reader(ByteView data, bool swapped) : data_(data), swapped_(swapped) {}

    std::uint32_t u32(std::size_t at) const {
        std::uint32_t v = std::uint32_t{data_[at]} | std::uint32_t{data_[at + 1]} << 8 |
                          std::uint32_t{data_[at + 2]} << 16 | std::uint32_t{data_[at + 3]} << 24;
        return swapped_ ? __builtin_bswap32(v) : v;
    }

private:
    ByteView data_;
    bool swapped_;
};

ParsedFrame parse_tcp(ByteView ip_payload, std::uint32_t segment_len, const IpAddress& src,
                      const IpAddress& dst) {
    ParsedFrame out;
    if (ip_payload.size() < 20 || segment_len < 20) return out;
    const std::size_t header = std::size_t{static_cast<std::uint8_t>(ip_payload[12] >> 4)} * 4;
    if (header < 20 || header > segment_len || header > ip_payload.size()) return out;

    TcpSegment& seg = out.segment;
    seg.tuple.src_ip = src;
    seg.tuple.dst_ip = dst;
    seg.tuple.src_port = be16(ip_payload, 0);
    seg.tuple.dst_port = be16(ip_payload, 2);
    seg.tuple.protocol = kProtoTcp;
    seg.flags = ip_payload[13];
    seg.payload_len = segment_len - static_cast<std::uint32_t>(header);
    const std::size_t captured = std::min<std::size_t>(ip_payload.size(), segment_len);
    seg.payload = ip_payload.subspan(header, captured - header);
    out.kind = FrameKind::Tcp;
    return out;
}

ParsedFrame parse_ipv4(ByteView pkt) {
    ParsedFrame out;
    if (pkt.size() < 20 || (pkt[0] >> 4) != 4) return out;
    const std::size_t ihl = std::size_t{static_cast<std::uint8_t>(pkt[0] & 0x0f)} * 4;
    const std::size_t total = be16(pkt, 2);
    if (ihl < 20 || total < ihl || pkt.size() < ihl) return out;
    const std::uint16_t frag = be16(pkt, 6);
    if ((frag & 0x1fff) != 0 || (frag & 0x2000) != 0) return out;  // fragments are not reassembled
    if (pkt[9] != kProtoTcp) {
        out.kind = FrameKind::NonTcp;
        return out;
    }
    IpAddress src = IpAddress::v4(pkt[12], pkt[13], pkt[14], pkt[15]);
    IpAddress dst = IpAddress::v4(pkt[16], pkt[17], pkt[18], pkt[19]);
    // Total length bounds the segment; trailing link padding is ignored.
    const std::size_t end = std::min(total, pkt.size());
    return parse_tcp(pkt.subspan(ihl, end - ihl), static_cast<std::uint32_t>(total - ihl), src, dst);
}

ParsedFrame parse_ipv6(ByteView pkt) {
    ParsedFrame out;
    if (pkt.size() < 40 || (pkt[0] >> 4) != 6) return out;
    std::size_t remaining = be16(pkt, 4);
    std::uint8_t next = pkt[6];
    std::size_t at = 40;
    // Hop-by-hop, routing and destination options headers.
    while (next == 0 || next == 43 || next == 60) {
        if (pkt.size() < at + 8) return out;
        const std::size_t len = (std::size_t{pkt[at + 1]} + 1) * 8;
        if (len > remaining) return out;
        next = pkt[at];
        at += len;
        remaining -= len;
    }
    if (next == 44) return out;  // fragment
    if (next != kProtoTcp) {
        out.kind = FrameKind::NonTcp;
        return out;
    }
    IpAddress src;
    IpAddress dst;
    src.v6 = dst.v6 = true;
    std::copy_n(pkt.begin() + 8, 16, src.bytes.begin());
    std::copy_n(pkt.begin() + 24, 16, dst.bytes.begin());
    if (pkt.size() < at) return out;
    const std::size_t avail = std::min(pkt.size() - at, remaining);
    return parse_tcp(pkt.subspan(at, avail), static_cast<std::uint32_t>(remaining), src, dst);
}

ParsedFrame parse_network(ByteView pkt, std::uint16_t ethertype) {
    if (ethertype == 0x0800) return parse_ipv4(pkt);
    if (ethertype == 0x86dd) return parse_ipv6(pkt);
    return {FrameKind::NonTcp, {}};
}

}  // namespace

ParsedFrame parse_frame(ByteView frame, LinkType link) {
    switch (link) {
        case LinkType::Ethernet: {
            if (frame.size() < 14) return {};
            std::size_t at = 12;
            std::uint16_t ethertype = be16(frame, at);
            at += 2;
            while (ethertype == 0x8100 || ethertype == 0x88a8) {
                if (frame.size() < at + 4) return {};
                ethertype = be16(frame, at + 2);
                at += 4;
            }
            return parse_network(frame.subspan(at), ethertype);
        }
        case LinkType::LinuxSll:
            if (frame.size() < 16) return {};
            return parse_network(frame.subspan(16), be16(frame, 14));
        case LinkType::Raw:
            if (frame.empty()) return {};
            return (frame[0] >> 4) == 6 ? parse_ipv6(frame) : parse_ipv4(frame);
        case LinkType::Ipv4:
            return parse_ipv4(frame);
        case LinkType::Ipv6:
            return parse_ipv6(frame);
    }
    return {};
}

std::optional<Bytes> filter_bias_bytes(ByteView frame, LinkType link) {
    const ParsedFrame parsed = parse_frame(frame, link);
    if (parsed.kind != FrameKind::Tcp) return std::nullopt;
    return Bytes(parsed.segment.payload.begin(), parsed.segment.payload.end());
}

CommInfo extract_comm_info(const Flow& flow) {
    CommInfo info;
    info.dst = flow.key.dst();
    Bytes server_stream;
    for (const Packet& p : flow.packets) {
        if (p.direction == Direction::ServerToClient) {
            server_stream.insert(server_stream.end(), p.payload.begin(), p.payload.end());
        }
    }
    if (auto cert = tls::first_certificate(server_stream)) {
        info.tls_cert_fingerprint = sha256_hex(*cert);
    }
    return info;
}

IngestResult reassemble_flows(ByteView capture) {
    IngestResult result;
    if (capture.empty()) return result;
    if (capture.size() < 24) throw FormatError("capture shorter than its global header");

    const std::uint32_t magic_le = std::uint32_t{capture[0]} | std::uint32_t{capture[1]} << 8 |
                                   std::uint32_t{capture[2]} << 16 | std::uint32_t{capture[3]} << 24;
    bool swapped = false;
    switch (magic_le) {
        case 0xa1b2c3d4:
        case 0xa1b23c4d:
            break;
        case 0xd4c3b2a1:
        case 0x4d3cb2a1:
            swapped = true;
            break;
        case 0x0a0d0d0a:
            throw FormatError("pcapng captures are not supported; convert to classic pcap");
        default:
            throw FormatError("unrecognised capture magic");
    }
    const Reader hdr(capture, swapped);
    const auto link = static_cast<LinkType>(hdr.u32(20) & 0x0fffffff);
    switch (link) {
        case LinkType::Ethernet:
        case LinkType::Raw:
        case LinkType::LinuxSll:
        case LinkType::Ipv4:
        case LinkType::Ipv6:
            break;
        default:
            throw FormatError("unsupported link type " + std::to_string(hdr.u32(20)));
    }

    struct OpenFlow {
        std::size_t index;
        bool closed = false;
        bool client_fin = false;
        bool server_fin = false;
    };
    std::map<FlowKey, OpenFlow> table;
    IngestStats& stats = result.stats;

    std::size_t pos = 24;
    std::uint64_t record_index = 0;
    while (pos < capture.size()) {
        if (pos + 16 > capture.size()) {
            ++stats.truncated_records;
            break;
        }
        const std::uint32_t incl = hdr.u32(pos + 8);
        if (incl > capture.size() - pos - 16) {
            ++stats.truncated_records;
            break;
        }
        const ByteView frame = capture.subspan(pos + 16, incl);
        pos += 16 + incl;
        const std::uint64_t index = record_index++;
        ++stats.records;

        const ParsedFrame parsed = parse_frame(frame, link);
        if (parsed.kind == FrameKind::NonTcp) {
            ++stats.dropped_non_tcp;
            continue;
        }
        if (parsed.kind == FrameKind::Malformed) {
            ++stats.malformed_frames;
            continue;
        }
        ++stats.tcp_packets;
        const TcpSegment& seg = parsed.segment;
        const bool syn = (seg.flags & tcp_flag::Syn) && !(seg.flags & tcp_flag::Ack);
        const bool syn_ack = (seg.flags & tcp_flag::Syn) && (seg.flags & tcp_flag::Ack);

        const FlowKey key = flow_key(seg.tuple);
        auto it = table.find(key);
        if (it == table.end() || (it->second.closed && syn)) {
            Flow flow;
            // The SYN-ACK receiver is the initiator; otherwise the first sender is.
            flow.key = syn_ack ? seg.tuple.reversed() : seg.tuple;
            result.flows.push_back(std::move(flow));
            it = table.insert_or_assign(key, OpenFlow{result.flows.size() - 1}).first;
        }
        OpenFlow& open = it->second;
        Flow& flow = result.flows[open.index];
        Packet pkt;
        pkt.direction =
            seg.tuple.src() == flow.key.src() ? Direction::ClientToServer : Direction::ServerToClient;
        pkt.payload.assign(seg.payload.begin(), seg.payload.end());
        pkt.capture_index = index;
        pkt.payload_len = seg.payload_len;
        flow.packets.push_back(std::move(pkt));

        if (seg.flags & tcp_flag::Rst) open.closed = true;
        if (seg.flags & tcp_flag::Fin) {
            (flow.packets.back().direction == Direction::ClientToServer ? open.client_fin
                                                                        : open.server_fin) = true;
            if (open.client_fin && open.server_fin) open.closed = true;
        }
    }

    for (Flow& flow : result.flows) flow.comm = extract_comm_info(flow);
    return result;
}

}  // namespace pass

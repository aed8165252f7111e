#include "pass/flow_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace pass {

using nlohmann::json;

json flow_to_json(const Flow& flow, std::size_t payload_cap) {
    json packets = json::array();
    for (const Packet& p : flow.packets) {
        const std::size_t keep = std::min(payload_cap, p.payload.size());
        packets.push_back({
            {"dir", p.direction == Direction::ClientToServer ? "c2s" : "s2c"},
            {"idx", p.capture_index},
            {"len", p.payload_len},
            {"payload", to_hex(ByteView{p.payload.data(), keep})},
        });
    }
    return {
        {"key",
         {{"src_ip", flow.key.src_ip.to_string()},
          {"dst_ip", flow.key.dst_ip.to_string()},
          {"src_port", flow.key.src_port},
          {"dst_port", flow.key.dst_port},
          {"proto", flow.key.protocol}}},
        {"label", flow.label ? json(*flow.label) : json(nullptr)},
        {"comm",
         {{"dst_ip", flow.comm.dst.ip.to_string()},
          {"dst_port", flow.comm.dst.port},
          {"cert", flow.comm.tls_cert_fingerprint ? json(*flow.comm.tls_cert_fingerprint)
                                                  : json(nullptr)}}},
        {"packets", std::move(packets)},
    };
}

Flow flow_from_json(const json& r) {
    try {
        Flow flow;
        const json& k = r.at("key");
        flow.key.src_ip = IpAddress::parse(k.at("src_ip").get<std::string>());
        flow.key.dst_ip = IpAddress::parse(k.at("dst_ip").get<std::string>());
        flow.key.src_port = k.at("src_port").get<std::uint16_t>();
        flow.key.dst_port = k.at("dst_port").get<std::uint16_t>();
        flow.key.protocol = k.at("proto").get<std::uint8_t>();
        if (flow.key.protocol != kProtoTcp) throw FormatError("flow record with non-TCP protocol");
        if (!r.at("label").is_null()) flow.label = r.at("label").get<ClassId>();
        const json& c = r.at("comm");
        flow.comm.dst.ip = IpAddress::parse(c.at("dst_ip").get<std::string>());
        flow.comm.dst.port = c.at("dst_port").get<std::uint16_t>();
        if (!c.at("cert").is_null()) flow.comm.tls_cert_fingerprint = c.at("cert").get<std::string>();
        for (const json& p : r.at("packets")) {
            Packet pkt;
            const std::string dir = p.at("dir").get<std::string>();
            if (dir == "c2s") {
                pkt.direction = Direction::ClientToServer;
            } else if (dir == "s2c") {
                pkt.direction = Direction::ServerToClient;
            } else {
                throw FormatError("invalid packet direction '" + dir + "'");
            }
            pkt.capture_index = p.at("idx").get<std::uint64_t>();
            pkt.payload_len = p.at("len").get<std::uint32_t>();
            pkt.payload = from_hex(p.at("payload").get<std::string>());
            flow.packets.push_back(std::move(pkt));
        }
        return flow;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed flow record: ") + e.what());
    }
}

void write_flows(std::ostream& out, const std::vector<Flow>& flows, std::size_t payload_cap) {
    for (const Flow& f : flows) out << flow_to_json(f, payload_cap).dump() << '\n';
}

std::vector<Flow> read_flows(std::istream& in) {
    std::vector<Flow> flows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError("flow file line " + std::to_string(lineno) + ": " + e.what());
        }
        flows.push_back(flow_from_json(record));
    }
    return flows;
}

std::vector<Flow> read_flows_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open flow file " + path);
    try {
        return read_flows(in);
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

void write_flows_file(const std::string& path, const std::vector<Flow>& flows,
                      std::size_t payload_cap) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    write_flows(out, flows, payload_cap);
}

}  // namespace pass

#include "pass/flow.hpp"

#include <arpa/inet.h>

namespace pass {

IpAddress IpAddress::v4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d) {
    IpAddress ip;
    ip.bytes[0] = a;
    ip.bytes[1] = b;
    ip.bytes[2] = c;
    ip.bytes[3] = d;
    return ip;
}

IpAddress IpAddress::parse(const std::string& text) {
    IpAddress ip;
    if (inet_pton(AF_INET, text.c_str(), ip.bytes.data()) == 1) return ip;
    if (inet_pton(AF_INET6, text.c_str(), ip.bytes.data()) == 1) {
        ip.v6 = true;
        return ip;
    }
    throw InputError("invalid IP address '" + text + "'");
}

std::string IpAddress::to_string() const {
    char buf[INET6_ADDRSTRLEN] = {};
    inet_ntop(v6 ? AF_INET6 : AF_INET, bytes.data(), buf, sizeof buf);
    return buf;
}

FlowKey flow_key(const FiveTuple& t) {
    Endpoint a = t.src();
    Endpoint b = t.dst();
    if (b < a) std::swap(a, b);
    return {a, b, t.protocol};
}

std::string CommInfo::key() const {
    std::string k = dst.ip.v6 ? "[" + dst.ip.to_string() + "]" : dst.ip.to_string();
    k += ":" + std::to_string(dst.port);
    if (tls_cert_fingerprint) k += "#" + *tls_cert_fingerprint;
    return k;
}

}  // namespace pass

#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "pass/flow.hpp"

namespace pass {

constexpr std::size_t kNoPayloadCap = std::numeric_limits<std::size_t>::max();

/// One flow as an interchange record. Payloads are cut to their first
/// `payload_cap` bytes; `len` keeps the on-wire length.
nlohmann::json flow_to_json(const Flow& flow, std::size_t payload_cap = kNoPayloadCap);
Flow flow_from_json(const nlohmann::json& record);

void write_flows(std::ostream& out, const std::vector<Flow>& flows,
                 std::size_t payload_cap = kNoPayloadCap);
std::vector<Flow> read_flows(std::istream& in);

std::vector<Flow> read_flows_file(const std::string& path);
void write_flows_file(const std::string& path, const std::vector<Flow>& flows,
                      std::size_t payload_cap = kNoPayloadCap);

}  // namespace pass

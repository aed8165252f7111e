#pragma once

#include <iosfwd>
#include <string>

#include "pass/model.hpp"

namespace pass {

/// Versioned binary container: magic, format version, encoder config, named
/// float32 little-endian row-major tensors, then a SHA-256 over everything
/// before it. Loading verifies the digest and every tensor shape.
Bytes serialize_checkpoint(const ModelParams<double>& params);
ModelParams<double> deserialize_checkpoint(ByteView bytes);

void save_checkpoint(const std::string& path, const ModelParams<double>& params);
ModelParams<double> load_checkpoint(const std::string& path);

// Rounds every parameter to float32 precision, i.e. the values a
// save/load cycle would produce.
void round_to_storage(ModelParams<double>& params);

}  // namespace pass

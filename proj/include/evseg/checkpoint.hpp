#pragma once

#include <optional>
#include <string>

#include "evseg/model.hpp"

namespace evseg {

// Flat checkpoint container:
//   8-byte magic "EVCK0001"
//   architecture kind, serialized ModelConfig
//   per-parameter records: name length + name + shape rank + extents +
//   raw little-endian 32-bit float values
//   trailing 64-bit FNV-1a checksum of everything between magic and checksum
//
// Values are stored as float32 regardless of the build's training precision;
// loading widens back. Magic, checksum and config/parameter inconsistencies
// each produce a distinct DataError.
constexpr char kCheckpointMagic[9] = "EVCK0001";

template <typename T>
void save_checkpoint(const std::string& path, const Model<T>& model);

// When `expected_kind`/`expected_config` are given, the checkpoint must
// enumerate exactly the same parameters; the error names the first offending
// record.
template <typename T>
Model<T> load_checkpoint(const std::string& path,
                         std::optional<ArchKind> expected_kind = std::nullopt,
                         const ModelConfig* expected_config = nullptr);

}  // namespace evseg

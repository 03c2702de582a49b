#pragma once

#include <string>

#include "srlbench/nn.hpp"

namespace srlbench::ad {

// Parameter container: magic, little-endian u32 JSON header length, JSON
// header (names, shapes, dtype tag, format version), then raw little-endian
// f64 blobs in header order. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const nn::NamedParams& params);

// Loads a container into freshly allocated tensors.
nn::NamedParams load_checkpoint(const std::string& path);

// Loads a container into existing tensors; names and shapes must match.
void load_checkpoint_into(const std::string& path, const nn::NamedParams& params);

}  // namespace srlbench::ad

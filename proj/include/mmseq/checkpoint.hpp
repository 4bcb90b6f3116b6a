#pragma once

#include <cstdint>
#include <string>

#include "mmseq/adam.hpp"
#include "mmseq/model.hpp"

namespace mmseq {

struct Checkpoint {
  Model model;
  AdamState adam;
  std::uint64_t step = 0;
};

// Versioned binary container: config, every named parameter, the Adam
// moment buffers, and the step counter. Write/read roundtrips are
// bit-exact.
void save_checkpoint(const std::string& path, const Model& m, const AdamState& state,
                     std::uint64_t step);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace mmseq

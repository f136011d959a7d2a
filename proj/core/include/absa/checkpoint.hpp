#pragma once

#include <string>

#include "absa/params.hpp"

namespace absa {

// Binary container of named float32 tensors plus a free-form JSON manifest
// (model configuration). Layout, all integers little-endian:
//
//   magic   "ABSACKP1"
//   u32     manifest byte length, then that many UTF-8 bytes
//   u32     tensor count
//   per tensor:
//     u32   name length, name bytes
//     u32   rank
//     u64   extents[rank]
//     f32   data[product(extents)]  (raw IEEE-754 bits)
//
// Round-trips are bit-exact: values are written and read as raw bits.
struct Checkpoint {
    ParamSet params;
    std::string manifest;
};

void save_checkpoint(const std::string& path, const ParamSet& params, const std::string& manifest);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace absa

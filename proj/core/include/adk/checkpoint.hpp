#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adk/tensor.hpp"

namespace adk {

// Versioned binary weight container. Layout, all little-endian:
//   magic "ADKT" | u32 version (=1) | repeated until EOF:
//     u32 name_len | name bytes | u32 ndim | u32 dims[ndim] | f32 data[numel]
// Writes go to a temp file and are renamed into place.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors);

std::map<std::string, Tensor> load_checkpoint(const std::string& path);

}  // namespace adk

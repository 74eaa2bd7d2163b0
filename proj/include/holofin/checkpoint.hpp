#pragma once

#include <string>

#include "holofin/fin.hpp"

namespace holofin::fin {

// Binary model checkpoint: magic "FINW", version u32, length-prefixed JSON
// config, then one record per parameter (name length u16, name utf-8, rank u8,
// extents u32 each, float32 little-endian values) in parameters() order.
void save_checkpoint(const std::string& path, const FinModel& model);
FinModel load_checkpoint(const std::string& path);

}  // namespace holofin::fin

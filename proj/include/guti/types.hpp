#pragma once

#include <cstdint>

namespace guti {

using TokenId = std::int32_t;

}  // namespace guti

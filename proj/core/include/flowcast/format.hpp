#pragma once

#include <string>

namespace flowcast {

// Shortest decimal string that parses back to the identical double. Used by
// every CSV/JSON writer so serialized numbers round-trip bit for bit.
std::string format_double(double v);

}  // namespace flowcast

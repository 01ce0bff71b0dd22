#include "nlex/common.hpp"

#ifndef NLEX_VERSION
#define NLEX_VERSION "0.0.0"
#endif

namespace nlex {
const char* version() { return NLEX_VERSION; }
}  // namespace nlex

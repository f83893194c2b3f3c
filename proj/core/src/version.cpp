#include "egsage/version.hpp"

#ifndef EGSAGE_VERSION_STRING
#define EGSAGE_VERSION_STRING "0.0.0"
#endif

namespace egsage {

auto version() -> const char* {
    return EGSAGE_VERSION_STRING;
}

} // namespace egsage

#pragma once

#ifndef PERCGAMES_VERSION_STRING
#define PERCGAMES_VERSION_STRING "0.1.0"
#endif

namespace percgames {

inline constexpr const char* version() { return PERCGAMES_VERSION_STRING; }

}  // namespace percgames

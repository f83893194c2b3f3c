#pragma once

namespace egsage {

// Tool version string, embedded into every serialized artifact.
const char* version();

} // namespace egsage

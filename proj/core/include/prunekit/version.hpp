#pragma once

namespace prunekit {
inline constexpr const char* kVersion = "0.1.0";
}

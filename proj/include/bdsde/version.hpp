#pragma once

namespace bdsde {

inline constexpr const char* kVersion = "bdsde-lab 0.1.0";

}  // namespace bdsde

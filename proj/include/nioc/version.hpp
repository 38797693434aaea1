#pragma once

namespace nioc {

inline constexpr char kVersion[] = "0.1.0";

}  // namespace nioc

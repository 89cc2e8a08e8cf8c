#pragma once

namespace ordsim {

inline constexpr char kLibraryVersion[] = "0.1.0";

}  // namespace ordsim

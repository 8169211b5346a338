#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace editeval {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some samples failed, outputs written
inline constexpr int kExitUsage = 2;    // bad arguments or unreadable input

// Entry point of the `editeval` tool. argv[0] is the program name.
int Dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace editeval

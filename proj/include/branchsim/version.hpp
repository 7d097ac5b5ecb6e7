#pragma once

namespace branchsim {

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace branchsim

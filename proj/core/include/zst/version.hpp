// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace zst {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace zst

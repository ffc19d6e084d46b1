// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace lenscope {

inline constexpr const char* library_version = "0.1.0";

} // namespace lenscope

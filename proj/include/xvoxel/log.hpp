#pragma once

#include <string>

namespace xv {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Level comes from XVOXEL_LOG (error|warn|info|debug), default warn.
LogLevel log_level();
void log(LogLevel level, const std::string& msg);

inline void log_warn(const std::string& msg) { log(LogLevel::kWarn, msg); }
inline void log_info(const std::string& msg) { log(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::kDebug, msg); }

}  // namespace xv

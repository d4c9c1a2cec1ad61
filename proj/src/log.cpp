#include "xvoxel/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace xv {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("XVOXEL_LOG");
    if (env == nullptr) return LogLevel::kWarn;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (level > log_level()) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[xvoxel:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

}  // namespace xv

#pragma once
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>
#include <string_view>

namespace teamrace {

// Raised for malformed specs, config files, and CLI arguments (exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by the Nash solver when the control coupling system is singular.
struct IllPosedGameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 64-bit FNV-1a, used for trace/config/geometry hashing.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= static_cast<std::uint64_t>(bytes[i]);
      state_ *= 0x00000100000001b3ull;
    }
  }
  template <typename T>
  void update_value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    update(&v, sizeof(T));
  }
  void update_string(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::uint64_t fnv1a64(std::string_view s) {
  Fnv1a64 h;
  h.update_string(s);
  return h.digest();
}

enum class LogLevel : int { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Log level comes from the RACE_LOG environment variable (error|warn|info|debug).
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("RACE_LOG");
    if (env == nullptr) return LogLevel::kWarn;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "warn") == 0) return LogLevel::kWarn;
    if (std::strcmp(env, "info") == 0) return LogLevel::kInfo;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

inline void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[race:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

inline void log_error(const std::string& msg) { log_message(LogLevel::kError, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::kWarn, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::kInfo, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::kDebug, msg); }

}  // namespace teamrace

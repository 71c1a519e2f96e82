#pragma once

// Line-oriented JSON event log on stderr.

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

#include <json.hpp>

namespace gatlas::log {

inline std::atomic<bool>& enabled() {
  static std::atomic<bool> flag{true};
  return flag;
}

inline void event(const std::string& level, const std::string& name, nlohmann::json fields = {}) {
  if (!enabled().load()) return;
  static std::mutex mutex;
  if (!fields.is_object()) fields = nlohmann::json::object();
  fields["level"] = level;
  fields["event"] = name;
  const std::string line = fields.dump();
  std::lock_guard lock(mutex);
  std::cerr << line << '\n';
}

inline void info(const std::string& name, nlohmann::json fields = {}) { event("info", name, std::move(fields)); }
inline void warn(const std::string& name, nlohmann::json fields = {}) { event("warn", name, std::move(fields)); }

}  // namespace gatlas::log

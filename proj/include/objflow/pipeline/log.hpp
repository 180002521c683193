#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

namespace objflow::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kQuiet = 4 };

inline std::string_view to_string(Level l) {
  switch (l) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    case Level::kQuiet: return "quiet";
  }
  return "info";
}

inline Level parse_level(std::string_view s, Level fallback = Level::kInfo) {
  for (Level l : {Level::kDebug, Level::kInfo, Level::kWarn, Level::kError, Level::kQuiet})
    if (s == to_string(l)) return l;
  return fallback;
}

/// One JSON object per line: {"stage", "level", "msg", ...fields}. The
/// threshold comes from OBJFLOW_LOG (debug|info|warn|error|quiet).
class Logger {
 public:
  explicit Logger(std::ostream& out = std::cerr) : out_(&out) {
    const char* env = std::getenv("OBJFLOW_LOG");
    threshold_ = env != nullptr ? parse_level(env) : Level::kInfo;
  }
  Logger(std::ostream& out, Level threshold) : out_(&out), threshold_(threshold) {}

  Level threshold() const { return threshold_; }

  void write(Level level, std::string_view stage, std::string_view msg, nlohmann::json fields = nlohmann::json::object()) const {
    if (level < threshold_ || threshold_ == Level::kQuiet) return;
    nlohmann::json rec = {{"stage", stage}, {"level", to_string(level)}, {"msg", msg}};
    for (auto& [k, v] : fields.items()) rec[k] = v;
    std::lock_guard<std::mutex> lock(mutex());
    *out_ << rec.dump() << '\n';
  }

  void debug(std::string_view stage, std::string_view msg, nlohmann::json f = nlohmann::json::object()) const { write(Level::kDebug, stage, msg, std::move(f)); }
  void info(std::string_view stage, std::string_view msg, nlohmann::json f = nlohmann::json::object()) const { write(Level::kInfo, stage, msg, std::move(f)); }
  void warn(std::string_view stage, std::string_view msg, nlohmann::json f = nlohmann::json::object()) const { write(Level::kWarn, stage, msg, std::move(f)); }
  void error(std::string_view stage, std::string_view msg, nlohmann::json f = nlohmann::json::object()) const { write(Level::kError, stage, msg, std::move(f)); }

 private:
  static std::mutex& mutex() {
    static std::mutex m;
    return m;
  }

  std::ostream* out_;
  Level threshold_;
};

}  // namespace objflow::log

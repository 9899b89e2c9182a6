#include "volcurve/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace volcurve::log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_logger_mt("volcurve");
    instance->set_pattern("[volcurve] [%l] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("VOLCURVE_LOG")) {
      level = spdlog::level::from_str(env);
    }
    instance->set_level(level);
  });
  return instance;
}

}  // namespace

void init_from_env() { logger(); }
void warn(const std::string& message) { logger()->warn(message); }
void info(const std::string& message) { logger()->info(message); }
void debug(const std::string& message) { logger()->debug(message); }

}  // namespace volcurve::log

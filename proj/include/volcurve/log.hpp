#pragma once

#include <string>

namespace volcurve::log {

// Thin facade over spdlog so library headers stay free of it. The level is
// read once from VOLCURVE_LOG (error|warn|info|debug|off); default is warn.
// All output goes to stderr.
void init_from_env();
void warn(const std::string& message);
void info(const std::string& message);
void debug(const std::string& message);

}  // namespace volcurve::log

#pragma once

#include <string>

namespace aeromap::log {

/// Applies MOSAIC_LOG (error|warn|info|debug); default warn.
void init_from_env();

void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);

}  // namespace aeromap::log

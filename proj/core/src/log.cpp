#include "aeromap/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <mutex>
#include <string_view>

namespace aeromap::log {
namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> instance;
  std::call_once(once, [] {
    instance = spdlog::stderr_color_mt("aeromap");
    instance->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    instance->set_level(spdlog::level::warn);
  });
  return instance;
}

}  // namespace

void init_from_env() {
  const char* env = std::getenv("MOSAIC_LOG");
  const std::string_view v = env ? env : "";
  auto lvl = spdlog::level::warn;
  if (v == "error") lvl = spdlog::level::err;
  else if (v == "info") lvl = spdlog::level::info;
  else if (v == "debug") lvl = spdlog::level::debug;
  logger()->set_level(lvl);
}

void debug(const std::string& msg) { logger()->debug(msg); }
void info(const std::string& msg) { logger()->info(msg); }
void warn(const std::string& msg) { logger()->warn(msg); }
void error(const std::string& msg) { logger()->error(msg); }

}  // namespace aeromap::log

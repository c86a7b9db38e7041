#pragma once

#include <string>

namespace hypertune {

// Log level comes from the HYPERTUNE_LOG environment variable
// (error|warn|info|debug); default is warn.
enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level();
void set_log_level(LogLevel level);
void log_message(LogLevel level, const std::string& msg);

void log_error(const std::string& msg);
void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace hypertune

#ifndef SONADV_LOG_HPP
#define SONADV_LOG_HPP

#include <string>

namespace sonadv::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Current level, initialized once from the SON_ADV_LOG environment variable
// (error|warn|info|debug, default warn).
Level level();
void set_level(Level lvl);

void write(Level lvl, const std::string& msg);

inline void error(const std::string& msg) { write(Level::Error, msg); }
inline void warn(const std::string& msg) { write(Level::Warn, msg); }
inline void info(const std::string& msg) { write(Level::Info, msg); }
inline void debug(const std::string& msg) { write(Level::Debug, msg); }

} // namespace sonadv::log

#endif

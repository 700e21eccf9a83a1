#include "sonadv/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace sonadv::log {

namespace {

Level level_from_env() {
    const char* env = std::getenv("SON_ADV_LOG");
    if (env == nullptr) return Level::Warn;
    if (std::strcmp(env, "error") == 0) return Level::Error;
    if (std::strcmp(env, "warn") == 0) return Level::Warn;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    return Level::Warn;
}

Level g_level = level_from_env();

const char* level_name(Level lvl) {
    switch (lvl) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    case Level::Debug: return "debug";
    }
    return "?";
}

} // namespace

Level level() { return g_level; }
void set_level(Level lvl) { g_level = lvl; }

void write(Level lvl, const std::string& msg) {
    if (static_cast<int>(lvl) > static_cast<int>(g_level)) return;
    std::fprintf(stderr, "[sonadv %s] %s\n", level_name(lvl), msg.c_str());
}

} // namespace sonadv::log

#ifndef SONADV_FMT_HPP
#define SONADV_FMT_HPP

#include <charconv>
#include <string>
#include <system_error>

namespace sonadv {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace sonadv

#endif

#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace rcsb {

// Bad inputs, config mistakes, contract violations. CLI maps these to exit 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures during an otherwise valid run (IO, divergence). CLI maps these to exit 2.
struct RuntimeFailure : std::runtime_error {
    explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void format_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    format_into(os, rest...);
}
}  // namespace detail

template <typename... Args>
std::string strcat_msg(const Args&... args) {
    std::ostringstream os;
    detail::format_into(os, args...);
    return os.str();
}

}  // namespace rcsb

#define RCSB_CHECK(cond, ...)                                             \
    do {                                                                  \
        if (!(cond)) throw ::rcsb::ValidationError(::rcsb::strcat_msg(__VA_ARGS__)); \
    } while (0)

#define RCSB_RUNTIME_CHECK(cond, ...)                                     \
    do {                                                                  \
        if (!(cond)) throw ::rcsb::RuntimeFailure(::rcsb::strcat_msg(__VA_ARGS__)); \
    } while (0)

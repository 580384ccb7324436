#ifndef WUG_ERRORS_HPP
#define WUG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wug {

// Exit codes used by the CLI: 1 input, 2 numeric, 3 configuration.

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace wug

#endif

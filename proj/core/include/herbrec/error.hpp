#pragma once

#include <stdexcept>
#include <string>

namespace herbrec {

// Bad input: malformed files, unknown names, contract violations at the
// boundary. The CLI maps these to exit code 2; everything else is exit 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents; carries a 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& msg, long line)
        : ValidationError(line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

}  // namespace herbrec

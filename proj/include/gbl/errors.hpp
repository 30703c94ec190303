#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gbl {

/// Malformed serialized input. `offset()` is a byte offset for binary
/// formats and a 1-based line number for text formats.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class CycleError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class UnsupportedError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace gbl

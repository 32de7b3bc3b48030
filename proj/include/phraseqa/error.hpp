#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phraseqa {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed entry in a line-delimited input. Line numbers are 1-based;
/// record indices (vector exchange files) are 0-based.
class ParseError : public Error {
public:
    enum class Unit { line, record };

    ParseError(std::size_t position, std::string field, const std::string& what, Unit unit = Unit::line)
        : Error((unit == Unit::line ? "line " : "record ") + std::to_string(position) + ": " + what),
          position_(position), field_(std::move(field)), unit_(unit) {}

    std::size_t line() const noexcept { return position_; }
    std::size_t position() const noexcept { return position_; }
    const std::string& field() const noexcept { return field_; }
    Unit unit() const noexcept { return unit_; }

private:
    std::size_t position_;
    std::string field_;
    Unit unit_;
};

} // namespace phraseqa

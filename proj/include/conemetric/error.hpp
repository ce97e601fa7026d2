#pragma once

#include <stdexcept>
#include <string>

namespace conemetric {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace conemetric

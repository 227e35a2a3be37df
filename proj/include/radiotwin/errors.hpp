#pragma once

#include <stdexcept>
#include <string>

namespace radiotwin {

// Dataset/file corruption, size mismatches, unsupported versions.
class IntegrityError : public std::runtime_error {
public:
    explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss went non-finite.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace radiotwin

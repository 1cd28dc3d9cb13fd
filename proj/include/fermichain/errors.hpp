#pragma once
#include <stdexcept>
#include <string>

namespace fermichain {

// All library failures carry a short machine-readable code
// (NotHermitian, WindowTooLarge, ...) plus a human message.
class FermiError : public std::runtime_error {
public:
    FermiError(std::string code, const std::string& msg)
        : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& msg) {
    throw FermiError(code, msg);
}

}  // namespace fermichain

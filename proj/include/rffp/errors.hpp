#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rffp {

// All pipeline failures are reported as an Error with a stable machine-readable
// kind. The CLI serializes (kind, message) as JSON on exit.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

namespace errors {

[[noreturn]] inline void parameter(const std::string& msg) { throw Error("parameter", msg); }
[[noreturn]] inline void invalid_profile(const std::string& msg) { throw Error("invalid-profile", msg); }
[[noreturn]] inline void degenerate_signal(const std::string& msg) { throw Error("degenerate-signal", msg); }
[[noreturn]] inline void shape(const std::string& msg) { throw Error("shape", msg); }
[[noreturn]] inline void label(const std::string& msg) { throw Error("label", msg); }
[[noreturn]] inline void stratification(const std::string& msg) { throw Error("stratification", msg); }
[[noreturn]] inline void training_diverged(const std::string& msg) { throw Error("training-diverged", msg); }
[[noreturn]] inline void io(const std::string& msg) { throw Error("io", msg); }

}  // namespace errors
}  // namespace rffp

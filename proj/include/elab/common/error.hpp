#pragma once

#include <stdexcept>
#include <string>

namespace elab {

/// Root of every error thrown by the e-Lab libraries.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace elab

#pragma once

#include <stdexcept>

namespace dmdp {

// Error categories aligned with the CLI exit codes:
//   ValidationError -> 2, GuardError -> 3, NumericError -> 4.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace dmdp

#pragma once

#include <ostream>

namespace mplab::tools {

/// Quick invariant checks; prints one line per check, returns the number of
/// failures.
int selftest(std::ostream& os);

}  // namespace mplab::tools

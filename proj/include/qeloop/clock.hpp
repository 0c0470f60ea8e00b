#pragma once

#include <functional>
#include <string>

namespace qeloop {

// Produces ISO-8601 UTC timestamps. A fixed clock makes workspace output
// byte-reproducible.
using Clock = std::function<std::string()>;

Clock system_clock();
Clock fixed_clock(std::string timestamp);

}  // namespace qeloop

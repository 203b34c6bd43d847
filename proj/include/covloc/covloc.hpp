#pragma once

#include "covloc/assimilate.hpp"
#include "covloc/core.hpp"
#include "covloc/error.hpp"
#include "covloc/io.hpp"
#include "covloc/localize.hpp"
#include "covloc/log.hpp"
#include "covloc/netgraph.hpp"
#include "covloc/random.hpp"
#include "covloc/report.hpp"
#include "covloc/tune.hpp"
#include "covloc/twinlab.hpp"

namespace covloc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace covloc

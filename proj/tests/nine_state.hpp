#pragma once

// Nine-state, four-observation worked example: two communities
// {x0..x3} and {x4..x8}, with y1 and y2 straddling them.

#include "covloc/netgraph.hpp"

namespace nine_state {

inline covloc::Matrix op() {
  covloc::Matrix h(4, 9);
  h << 1, 1, 1, 1, 0, 0, 0, 0, 0,
       0, 1, 1, 1, 0, 1, 0, 0, 0,
       0, 0, 0, 1, 0, 1, 1, 1, 0,
       0, 0, 0, 0, 1, 1, 0, 1, 1;
  return 0.25 * h;
}

inline covloc::ClusterPartition partition() {
  return covloc::ClusterPartition({1, 1, 1, 1, 2, 2, 2, 2, 2}, 2);
}

}  // namespace nine_state

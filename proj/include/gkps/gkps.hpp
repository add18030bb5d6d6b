#pragma once

// Everything except the experiment drivers; include gkps/experiment.hpp
// separately (it needs nlohmann/json on the include path for manifests).

#include "gkps/allocator.hpp"
#include "gkps/common.hpp"
#include "gkps/config.hpp"
#include "gkps/germ.hpp"
#include "gkps/link_sim.hpp"
#include "gkps/noise.hpp"
#include "gkps/rates.hpp"
#include "gkps/rng.hpp"
#include "gkps/steane.hpp"

#pragma once

// Umbrella header for the netkin library: network-structured kinetic models
// of pairwise social interactions at three fidelity levels (exact jump
// process, mean-field transport, nonlocal reaction-diffusion), instantiated
// for dialect, social-norm and epidemic dynamics.

#include "netkin/common.hpp"
#include "netkin/config.hpp"
#include "netkin/csv.hpp"
#include "netkin/dialect.hpp"
#include "netkin/epidemic.hpp"
#include "netkin/field.hpp"
#include "netkin/integrate.hpp"
#include "netkin/kernel.hpp"
#include "netkin/law.hpp"
#include "netkin/meanfield.hpp"
#include "netkin/norms.hpp"
#include "netkin/particle.hpp"
#include "netkin/rng.hpp"
#include "netkin/scenario.hpp"
#include "netkin/simplex.hpp"
#include "netkin/site_space.hpp"
#include "netkin/stats.hpp"
#include "netkin/trajectory.hpp"

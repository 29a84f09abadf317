#pragma once

// Exact thermodynamics of finite product probability spaces: canonical
// ensembles, entropy identities and the concentration-bound catalog they
// generate, validated against an exact tail-probability oracle.

#include "thermotail/analytic.hpp"
#include "thermotail/bounds.hpp"
#include "thermotail/empirical.hpp"
#include "thermotail/identities.hpp"
#include "thermotail/io.hpp"
#include "thermotail/quadrature.hpp"
#include "thermotail/rng.hpp"
#include "thermotail/space.hpp"
#include "thermotail/thermo.hpp"

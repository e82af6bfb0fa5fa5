#pragma once

// Silent self-stabilizing exact majority: umbrella header.

#include "popmaj/engine.hpp"
#include "popmaj/harness.hpp"
#include "popmaj/majority.hpp"
#include "popmaj/ranking.hpp"
#include "popmaj/rng.hpp"
#include "popmaj/snapshot.hpp"
#include "popmaj/types.hpp"
#include "popmaj/verifier.hpp"

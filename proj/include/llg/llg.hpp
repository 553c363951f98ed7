#pragma once

// Umbrella header for the equivariant LLG blowup lab.

#include "asymptotics.hpp"
#include "banded.hpp"
#include "bubble.hpp"
#include "config.hpp"
#include "core.hpp"
#include "diagnostics.hpp"
#include "dynamics.hpp"
#include "harness.hpp"
#include "initial_data.hpp"
#include "integrator.hpp"
#include "mesh.hpp"

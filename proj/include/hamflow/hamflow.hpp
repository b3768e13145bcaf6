#pragma once

// Umbrella header for the hamflow library.

#include "basis.hpp"
#include "config.hpp"
#include "experiments.hpp"
#include "fft.hpp"
#include "field.hpp"
#include "flow.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "liouville.hpp"
#include "measure.hpp"
#include "model.hpp"
#include "pathspace.hpp"
#include "rng.hpp"
#include "testfn.hpp"

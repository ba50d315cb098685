#pragma once

// Convenience header pulling in the whole library.

#include "knobkit/acquisition.hpp"
#include "knobkit/benchsuite.hpp"
#include "knobkit/csv.hpp"
#include "knobkit/error.hpp"
#include "knobkit/forest.hpp"
#include "knobkit/gp.hpp"
#include "knobkit/history.hpp"
#include "knobkit/importance.hpp"
#include "knobkit/kernel.hpp"
#include "knobkit/parzen.hpp"
#include "knobkit/rng.hpp"
#include "knobkit/session.hpp"
#include "knobkit/space.hpp"
#include "knobkit/synthetic.hpp"
#include "knobkit/transfer.hpp"

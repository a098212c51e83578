#pragma once

// Umbrella header. report.hpp needs nlohmann's json.hpp on the include path;
// everything else is self-contained.
#include "pinch/analyzer.hpp"
#include "pinch/digest.hpp"
#include "pinch/errors.hpp"
#include "pinch/extremal.hpp"
#include "pinch/immersion.hpp"
#include "pinch/ineq.hpp"
#include "pinch/matcore.hpp"
#include "pinch/models.hpp"
#include "pinch/quadrature.hpp"
#include "pinch/random.hpp"
#include "pinch/report.hpp"

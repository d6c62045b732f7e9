#pragma once

#include "laxflow/common.hpp"
#include "laxflow/spectral.hpp"
#include "laxflow/lax.hpp"
#include "laxflow/propagator.hpp"
#include "laxflow/scheme.hpp"
#include "laxflow/diagnostics.hpp"

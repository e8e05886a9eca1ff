#pragma once

#include "csivitals/breath.hpp"
#include "csivitals/config.hpp"
#include "csivitals/error.hpp"
#include "csivitals/eval.hpp"
#include "csivitals/filters.hpp"
#include "csivitals/motion.hpp"
#include "csivitals/normalize.hpp"
#include "csivitals/outage.hpp"
#include "csivitals/pipeline.hpp"
#include "csivitals/preprocess.hpp"
#include "csivitals/report.hpp"
#include "csivitals/rng.hpp"
#include "csivitals/sleep.hpp"
#include "csivitals/special.hpp"
#include "csivitals/subspace.hpp"
#include "csivitals/synth.hpp"
#include "csivitals/trace_io.hpp"
#include "csivitals/types.hpp"

#pragma once

// Umbrella header: queueing analysis, the event simulator, twin mirroring,
// the detection stack and the experiment harness.

#include "vtwin/baselines.hpp"
#include "vtwin/benchmark.hpp"
#include "vtwin/clustering.hpp"
#include "vtwin/csv.hpp"
#include "vtwin/datasets.hpp"
#include "vtwin/errors.hpp"
#include "vtwin/experiments.hpp"
#include "vtwin/feature_selection.hpp"
#include "vtwin/features.hpp"
#include "vtwin/metrics.hpp"
#include "vtwin/mlp.hpp"
#include "vtwin/pipeline.hpp"
#include "vtwin/queueing.hpp"
#include "vtwin/rng.hpp"
#include "vtwin/sim.hpp"
#include "vtwin/twinning.hpp"

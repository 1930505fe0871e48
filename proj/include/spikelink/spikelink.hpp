#pragma once

#include "spikelink/core.hpp"
#include "spikelink/rng.hpp"
#include "spikelink/matrix.hpp"
#include "spikelink/csv.hpp"
#include "spikelink/stats.hpp"
#include "spikelink/codec.hpp"
#include "spikelink/nef.hpp"
#include "spikelink/neurosim.hpp"
#include "spikelink/robosim.hpp"
#include "spikelink/runtime.hpp"
#include "spikelink/stages.hpp"
#include "spikelink/config.hpp"
#include "spikelink/build.hpp"
#include "spikelink/bench.hpp"

#pragma once

#include "pcorr/core_stats.hpp"
#include "pcorr/equidist.hpp"
#include "pcorr/error.hpp"
#include "pcorr/experiments.hpp"
#include "pcorr/farey.hpp"
#include "pcorr/parallel.hpp"
#include "pcorr/report.hpp"
#include "pcorr/rng.hpp"
#include "pcorr/sequence.hpp"
#include "pcorr/sequences.hpp"
#include "pcorr/torus.hpp"

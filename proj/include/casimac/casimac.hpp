#pragma once

#include "casimac/classifier.hpp"
#include "casimac/csv.hpp"
#include "casimac/dataset.hpp"
#include "casimac/error.hpp"
#include "casimac/geometry.hpp"
#include "casimac/gpr.hpp"
#include "casimac/metrics.hpp"
#include "casimac/optimize.hpp"
#include "casimac/preprocess.hpp"
#include "casimac/random.hpp"
#include "casimac/regression.hpp"
#include "casimac/semimetric.hpp"
#include "casimac/serialization.hpp"
#include "casimac/split.hpp"
#include "casimac/synth.hpp"
#include "casimac/transform.hpp"
#include "casimac/tuning.hpp"

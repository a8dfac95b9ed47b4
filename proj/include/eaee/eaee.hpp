#ifndef EAEE_EAEE_HPP
#define EAEE_EAEE_HPP

// Umbrella header.

#include "eaee/common.hpp"
#include "eaee/rng.hpp"
#include "eaee/model.hpp"
#include "eaee/spectral.hpp"
#include "eaee/weight.hpp"
#include "eaee/estimator.hpp"
#include "eaee/quadrature.hpp"
#include "eaee/criteria.hpp"
#include "eaee/stats.hpp"
#include "eaee/sampler.hpp"
#include "eaee/diagnostics.hpp"
#include "eaee/pipeline/config.hpp"
#include "eaee/pipeline/graph_io.hpp"
#include "eaee/pipeline/knn.hpp"
#include "eaee/pipeline/scenario.hpp"
#include "eaee/pipeline/network.hpp"

#endif

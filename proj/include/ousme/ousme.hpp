#pragma once

#include "ousme/errors.hpp"
#include "ousme/special.hpp"
#include "ousme/quadrature.hpp"
#include "ousme/rng.hpp"
#include "ousme/parallel.hpp"
#include "ousme/covariance.hpp"
#include "ousme/sampler.hpp"
#include "ousme/estimators.hpp"
#include "ousme/cumulants.hpp"
#include "ousme/distances.hpp"
#include "ousme/harness.hpp"

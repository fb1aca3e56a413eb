#pragma once

#include "relarb/errors.hpp"
#include "relarb/rng.hpp"
#include "relarb/stats.hpp"
#include "relarb/parallel.hpp"
#include "relarb/model.hpp"
#include "relarb/bessel.hpp"
#include "relarb/time_change.hpp"
#include "relarb/euler.hpp"
#include "relarb/estimator.hpp"
#include "relarb/bsde.hpp"

#pragma once

#include "wasserinfer/clt_inference.hpp"
#include "wasserinfer/distributions.hpp"
#include "wasserinfer/errors.hpp"
#include "wasserinfer/fairness.hpp"
#include "wasserinfer/io.hpp"
#include "wasserinfer/montecarlo.hpp"
#include "wasserinfer/quadrature.hpp"
#include "wasserinfer/rng.hpp"
#include "wasserinfer/transport.hpp"

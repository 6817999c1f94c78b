#pragma once

// Umbrella header for the whole toolkit.

#include "red/bicubic.hpp"
#include "red/cg.hpp"
#include "red/checks.hpp"
#include "red/denoisers.hpp"
#include "red/experiment.hpp"
#include "red/fft.hpp"
#include "red/image.hpp"
#include "red/noise.hpp"
#include "red/operators.hpp"
#include "red/pgm.hpp"
#include "red/rng.hpp"
#include "red/solver.hpp"
#include "red/synthetic.hpp"
#include "red/version.hpp"
#include "red/wavelet.hpp"

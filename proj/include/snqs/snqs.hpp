#pragma once

#include "snqs/ansatz.hpp"
#include "snqs/chebyshev.hpp"
#include "snqs/config.hpp"
#include "snqs/driver.hpp"
#include "snqs/errors.hpp"
#include "snqs/exact.hpp"
#include "snqs/hamiltonian.hpp"
#include "snqs/io.hpp"
#include "snqs/loss.hpp"
#include "snqs/optimizer.hpp"
#include "snqs/propagator.hpp"
#include "snqs/rbm.hpp"
#include "snqs/rng.hpp"
#include "snqs/sampler.hpp"
#include "snqs/spin.hpp"

#pragma once

// Umbrella header: distributional policy evaluation on finite Markov reward
// systems. Fixed points of the distributional Bellman operator, existence
// via the log-moment criterion on essential states, closed-form heavy-tail
// asymptotics, and Monte Carlo / affine-equation cross checks.

#include "dbe/affine.hpp"
#include "dbe/bellman.hpp"
#include "dbe/chain.hpp"
#include "dbe/classic_bellman.hpp"
#include "dbe/distributions.hpp"
#include "dbe/monte_carlo.hpp"
#include "dbe/mrp.hpp"
#include "dbe/parallel.hpp"
#include "dbe/reward_laws.hpp"
#include "dbe/rng.hpp"
#include "dbe/serialization.hpp"
#include "dbe/tails.hpp"

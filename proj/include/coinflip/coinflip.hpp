#pragma once

#include "coinflip/rational.hpp"
#include "coinflip/tree.hpp"
#include "coinflip/core.hpp"
#include "coinflip/dominated.hpp"
#include "coinflip/attack.hpp"
#include "coinflip/numerics.hpp"
#include "coinflip/rng.hpp"
#include "coinflip/oracles.hpp"
#include "coinflip/pruning.hpp"
#include "coinflip/inverter.hpp"
#include "coinflip/generate.hpp"

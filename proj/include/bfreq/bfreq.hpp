#pragma once

#include "bfreq/config.hpp"
#include "bfreq/csbi_model.hpp"
#include "bfreq/csbi_sim.hpp"
#include "bfreq/csv.hpp"
#include "bfreq/error.hpp"
#include "bfreq/experiment.hpp"
#include "bfreq/freq_model.hpp"
#include "bfreq/freq_sde.hpp"
#include "bfreq/generators.hpp"
#include "bfreq/jump_laws.hpp"
#include "bfreq/polynomial.hpp"
#include "bfreq/quadrature.hpp"
#include "bfreq/rng.hpp"
#include "bfreq/stable_measures.hpp"
#include "bfreq/stats.hpp"
#include "bfreq/time_change.hpp"

#pragma once

#include "cosq/special.hpp"
#include "cosq/rng.hpp"
#include "cosq/parallel.hpp"
#include "cosq/channel_model.hpp"
#include "cosq/feedback_mapping.hpp"
#include "cosq/outage_objective.hpp"
#include "cosq/nelder_mead.hpp"
#include "cosq/codebook_optimizer.hpp"
#include "cosq/link_simulator.hpp"
#include "cosq/experiments.hpp"
#include "cosq/json_io.hpp"
#include "cosq/config.hpp"

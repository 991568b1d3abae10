#pragma once

#include "srcsel/artifacts.hpp"
#include "srcsel/bandit.hpp"
#include "srcsel/config.hpp"
#include "srcsel/csv.hpp"
#include "srcsel/dataset.hpp"
#include "srcsel/diagnostics.hpp"
#include "srcsel/ensemble.hpp"
#include "srcsel/error.hpp"
#include "srcsel/experiment.hpp"
#include "srcsel/hash.hpp"
#include "srcsel/learner.hpp"
#include "srcsel/parallel.hpp"
#include "srcsel/partition.hpp"
#include "srcsel/random.hpp"
#include "srcsel/simgen.hpp"

#pragma once

#include "speedup/errors.hpp"
#include "speedup/sparse_vector.hpp"
#include "speedup/ilp_core.hpp"
#include "speedup/instance_io.hpp"
#include "speedup/model.hpp"
#include "speedup/search.hpp"
#include "speedup/lagrangian.hpp"
#include "speedup/speedup_learning.hpp"
#include "speedup/er_task.hpp"
#include "speedup/er_planted.hpp"
#include "speedup/evaluation.hpp"
#include "speedup/run_config.hpp"
#include "speedup/dataset.hpp"

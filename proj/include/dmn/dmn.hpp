#pragma once

// Everything except the JSON layer (dmn/json_io.hpp), which needs nlohmann/json.

#include "dmn/atomic_file.hpp"
#include "dmn/bench.hpp"
#include "dmn/builder.hpp"
#include "dmn/dataset.hpp"
#include "dmn/dkn.hpp"
#include "dmn/eigen_projection.hpp"
#include "dmn/error.hpp"
#include "dmn/gradcheck.hpp"
#include "dmn/kernel.hpp"
#include "dmn/metrics.hpp"
#include "dmn/model.hpp"
#include "dmn/model_io.hpp"
#include "dmn/parallel.hpp"
#include "dmn/training.hpp"

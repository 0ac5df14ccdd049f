#pragma once

#include "augur/descriptor.hpp"
#include "augur/error.hpp"
#include "augur/gemm.hpp"
#include "augur/gemm_bench.hpp"
#include "augur/memory.hpp"
#include "augur/profile.hpp"
#include "augur/prototxt.hpp"
#include "augur/report.hpp"
#include "augur/shape_inference.hpp"
#include "augur/timing_model.hpp"
#include "augur/workload.hpp"

#pragma once

#include "dcp/error.hpp"
#include "dcp/io.hpp"
#include "dcp/kernel.hpp"
#include "dcp/linalg.hpp"
#include "dcp/metrics.hpp"
#include "dcp/partition.hpp"
#include "dcp/random.hpp"
#include "dcp/sampler.hpp"
#include "dcp/synthetic.hpp"

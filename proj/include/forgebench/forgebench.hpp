// SPDX-License-Identifier: Apache-2.0

#pragma once

// Umbrella header: the whole library in one include.

#include "forgebench/codegen.hpp"
#include "forgebench/common.hpp"
#include "forgebench/config.hpp"
#include "forgebench/kernels.hpp"
#include "forgebench/modularize.hpp"
#include "forgebench/opspec.hpp"
#include "forgebench/reports.hpp"
#include "forgebench/runner.hpp"
#include "forgebench/sweep.hpp"
#include "forgebench/tensor.hpp"

#pragma once

#include "pirules/backprop.hpp"
#include "pirules/benchmarks.hpp"
#include "pirules/degrees.hpp"
#include "pirules/distributions.hpp"
#include "pirules/domain.hpp"
#include "pirules/inference.hpp"
#include "pirules/io.hpp"
#include "pirules/learning.hpp"
#include "pirules/partition.hpp"
#include "pirules/rules.hpp"
#include "pirules/transforms.hpp"

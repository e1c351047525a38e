#pragma once

#include "pgmn/checkpoint.hpp"
#include "pgmn/harness.hpp"
#include "pgmn/metrics.hpp"
#include "pgmn/model.hpp"
#include "pgmn/numkit.hpp"
#include "pgmn/pipeline.hpp"
#include "pgmn/scenario.hpp"
#include "pgmn/series.hpp"
#include "pgmn/surrogates.hpp"
#include "pgmn/train.hpp"

#pragma once

#include "metaeval/error.hpp"
#include "metaeval/rng.hpp"
#include "metaeval/tensor.hpp"
#include "metaeval/stats.hpp"
#include "metaeval/dataset.hpp"
#include "metaeval/net.hpp"
#include "metaeval/explain.hpp"
#include "metaeval/estimators.hpp"
#include "metaeval/perturb.hpp"
#include "metaeval/consistency.hpp"
#include "metaeval/model_io.hpp"
#include "metaeval/config.hpp"
#include "metaeval/report.hpp"
#include "metaeval/pipeline.hpp"
#include "metaeval/commands.hpp"

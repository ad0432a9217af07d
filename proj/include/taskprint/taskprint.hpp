#pragma once

#include "taskprint/baselines.hpp"
#include "taskprint/bkld.hpp"
#include "taskprint/bootstrap.hpp"
#include "taskprint/divergence.hpp"
#include "taskprint/errors.hpp"
#include "taskprint/evaluation.hpp"
#include "taskprint/feature_matrix.hpp"
#include "taskprint/fingerprint.hpp"
#include "taskprint/knowledge_cloud.hpp"
#include "taskprint/measures.hpp"
#include "taskprint/meta_metrics.hpp"
#include "taskprint/outcomes.hpp"
#include "taskprint/rank_correlation.hpp"
#include "taskprint/selector.hpp"

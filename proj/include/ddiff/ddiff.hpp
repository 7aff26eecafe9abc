#pragma once

#include <ddiff/core/dense_matrix.hpp>
#include <ddiff/core/error.hpp>
#include <ddiff/core/parallel.hpp>
#include <ddiff/graph/affinity.hpp>
#include <ddiff/graph/feature_set.hpp>
#include <ddiff/graph/knn.hpp>
#include <ddiff/graph/similarity.hpp>
#include <ddiff/graph/sparse_matrix.hpp>
#include <ddiff/offline/build.hpp>
#include <ddiff/offline/cg.hpp>
#include <ddiff/offline/index_io.hpp>
#include <ddiff/offline/slice.hpp>
#include <ddiff/offline/sparsified_inverse.hpp>
#include <ddiff/offline/truncation.hpp>
#include <ddiff/online/initial_state.hpp>
#include <ddiff/online/ranking.hpp>
#include <ddiff/online/search.hpp>
#include <ddiff/baselines/baselines.hpp>
#include <ddiff/eval/bench.hpp>
#include <ddiff/eval/metrics.hpp>
#include <ddiff/eval/synthetic.hpp>

#pragma once

#include "dmap/error.hpp"
#include "dmap/tensor.hpp"
#include "dmap/tensor_io.hpp"
#include "dmap/phantom.hpp"
#include "dmap/kernel_graph.hpp"
#include "dmap/spectral_embed.hpp"
#include "dmap/oos_extension.hpp"
#include "dmap/space_io.hpp"
#include "dmap/alt_embedders.hpp"
#include "dmap/embedder.hpp"
#include "dmap/classifiers.hpp"
#include "dmap/metrics.hpp"
#include "dmap/ensemble.hpp"
#include "dmap/reports.hpp"

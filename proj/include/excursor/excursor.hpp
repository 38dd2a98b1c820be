#pragma once

// Excursion-set statistics of time series: feature catalogs, Gaussian
// baselines, unweighted two-point (cross-)correlation estimators, feature
// clustering matrices, Ward hierarchies and windowed SVD similarity.

#include "excursor/cluster.hpp"
#include "excursor/common.hpp"
#include "excursor/features.hpp"
#include "excursor/ingest.hpp"
#include "excursor/io.hpp"
#include "excursor/matrices.hpp"
#include "excursor/paircorr.hpp"
#include "excursor/parallel.hpp"
#include "excursor/rng.hpp"
#include "excursor/spectral.hpp"
#include "excursor/theory.hpp"

#pragma once

#include "cusumseg/binary_mask.hpp"
#include "cusumseg/cusum.hpp"
#include "cusumseg/error.hpp"
#include "cusumseg/imaging.hpp"
#include "cusumseg/mask.hpp"
#include "cusumseg/metrics.hpp"
#include "cusumseg/pgm_io.hpp"
#include "cusumseg/phantom.hpp"
#include "cusumseg/pipeline.hpp"
#include "cusumseg/planner.hpp"
#include "cusumseg/region.hpp"
#include "cusumseg/seed.hpp"
#include "cusumseg/segmenter.hpp"

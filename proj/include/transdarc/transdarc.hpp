#pragma once

#include "transdarc/calibration.hpp"
#include "transdarc/config.hpp"
#include "transdarc/dataset.hpp"
#include "transdarc/error.hpp"
#include "transdarc/evaluation.hpp"
#include "transdarc/head.hpp"
#include "transdarc/optim.hpp"
#include "transdarc/parallel.hpp"
#include "transdarc/pipeline.hpp"
#include "transdarc/stats.hpp"
#include "transdarc/synth.hpp"
#include "transdarc/train.hpp"

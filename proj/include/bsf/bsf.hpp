#pragma once

#include "bsf/tensor.hpp"
#include "bsf/rng.hpp"
#include "bsf/layers.hpp"
#include "bsf/bsf_layer.hpp"
#include "bsf/loss.hpp"
#include "bsf/optim.hpp"
#include "bsf/network.hpp"
#include "bsf/dataset.hpp"
#include "bsf/metrics.hpp"
#include "bsf/builders.hpp"
#include "bsf/train.hpp"
#include "bsf/prune.hpp"
#include "bsf/frames.hpp"
#include "bsf/report.hpp"

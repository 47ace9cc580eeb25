#pragma once

#include "dipaint/error.hpp"
#include "dipaint/image.hpp"
#include "dipaint/rng.hpp"
#include "dipaint/png_io.hpp"
#include "dipaint/masking.hpp"
#include "dipaint/fill.hpp"
#include "dipaint/variational.hpp"
#include "dipaint/patchmatch.hpp"
#include "dipaint/metrics.hpp"
#include "dipaint/neural/tensor.hpp"
#include "dipaint/neural/layers.hpp"
#include "dipaint/neural/network.hpp"
#include "dipaint/neural/loss.hpp"
#include "dipaint/neural/rmsprop.hpp"
#include "dipaint/neural/style.hpp"
#include "dipaint/neural/train.hpp"
#include "dipaint/neural/checkpoint.hpp"

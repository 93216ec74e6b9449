#pragma once

#include "entropystop/errors.hpp"
#include "entropystop/rng.hpp"
#include "entropystop/matrix.hpp"
#include "entropystop/dataset.hpp"
#include "entropystop/nn.hpp"
#include "entropystop/models.hpp"
#include "entropystop/entropy.hpp"
#include "entropystop/stopper.hpp"
#include "entropystop/evalstats.hpp"
#include "entropystop/trainer.hpp"
#include "entropystop/synth.hpp"
#include "entropystop/harness.hpp"

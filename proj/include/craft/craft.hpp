#pragma once

#include "craft/baselines.hpp"
#include "craft/checkpoint.hpp"
#include "craft/config.hpp"
#include "craft/corpus.hpp"
#include "craft/error.hpp"
#include "craft/experiments.hpp"
#include "craft/forecaster.hpp"
#include "craft/gru.hpp"
#include "craft/hred.hpp"
#include "craft/matrix.hpp"
#include "craft/metrics.hpp"
#include "craft/params.hpp"
#include "craft/pipeline.hpp"
#include "craft/split.hpp"
#include "craft/synthetic.hpp"
#include "craft/tape.hpp"
#include "craft/trace_io.hpp"
#include "craft/vocab.hpp"

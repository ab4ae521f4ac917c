#pragma once

#include "vibrodiag/classifiers.hpp"
#include "vibrodiag/error.hpp"
#include "vibrodiag/eval.hpp"
#include "vibrodiag/features.hpp"
#include "vibrodiag/fft.hpp"
#include "vibrodiag/ingest.hpp"
#include "vibrodiag/labels.hpp"
#include "vibrodiag/spectrum.hpp"
#include "vibrodiag/synth.hpp"

#pragma once

// Umbrella header.

#include "mediatopic/archive.hpp"
#include "mediatopic/baseline.hpp"
#include "mediatopic/corpus.hpp"
#include "mediatopic/errors.hpp"
#include "mediatopic/eval.hpp"
#include "mediatopic/featurize.hpp"
#include "mediatopic/fusion.hpp"
#include "mediatopic/gmm.hpp"
#include "mediatopic/lda.hpp"
#include "mediatopic/matrix.hpp"
#include "mediatopic/numeric.hpp"
#include "mediatopic/pipeline.hpp"
#include "mediatopic/random.hpp"
#include "mediatopic/stages.hpp"
#include "mediatopic/svm.hpp"
#include "mediatopic/synth.hpp"
#include "mediatopic/weighting.hpp"

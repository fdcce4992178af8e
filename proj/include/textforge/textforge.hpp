#pragma once

#include "textforge/corpus.hpp"
#include "textforge/errors.hpp"
#include "textforge/filters.hpp"
#include "textforge/generation.hpp"
#include "textforge/http_backend.hpp"
#include "textforge/io.hpp"
#include "textforge/linear_model.hpp"
#include "textforge/metrics.hpp"
#include "textforge/ngram_lm.hpp"
#include "textforge/parallel.hpp"
#include "textforge/random.hpp"
#include "textforge/sampling.hpp"
#include "textforge/scenarios.hpp"
#include "textforge/synthetic.hpp"
#include "textforge/text_norm.hpp"
#include "textforge/vectorizer.hpp"

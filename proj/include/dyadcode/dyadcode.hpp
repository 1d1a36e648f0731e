#pragma once

#include "dyadcode/config.hpp"
#include "dyadcode/corpus.hpp"
#include "dyadcode/error.hpp"
#include "dyadcode/evalstats.hpp"
#include "dyadcode/experiment.hpp"
#include "dyadcode/lexicon.hpp"
#include "dyadcode/matrix.hpp"
#include "dyadcode/report.hpp"
#include "dyadcode/svm.hpp"
#include "dyadcode/tfidf.hpp"
#include "dyadcode/tokenizer.hpp"
#include "dyadcode/vectors.hpp"

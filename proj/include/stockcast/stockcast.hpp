#pragma once

#include "stockcast/bundle.hpp"
#include "stockcast/data_model.hpp"
#include "stockcast/metrics.hpp"
#include "stockcast/neural_net.hpp"
#include "stockcast/pipeline.hpp"
#include "stockcast/random_forest.hpp"
#include "stockcast/serialization.hpp"
#include "stockcast/synthetic.hpp"
#include "stockcast/text_vectorizer.hpp"

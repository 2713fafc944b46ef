#pragma once

#include "concord/concept.hpp"
#include "concord/concept_graph.hpp"
#include "concord/corpus_io.hpp"
#include "concord/error.hpp"
#include "concord/eval_metrics.hpp"
#include "concord/gen_client.hpp"
#include "concord/lexical_match.hpp"
#include "concord/orderer.hpp"
#include "concord/rng.hpp"
#include "concord/transition_model.hpp"
#include "concord/walk_sampler.hpp"

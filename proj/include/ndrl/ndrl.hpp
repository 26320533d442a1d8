#pragma once

#include "ndrl/checkpoint.hpp"
#include "ndrl/config.hpp"
#include "ndrl/desc_attention.hpp"
#include "ndrl/errors.hpp"
#include "ndrl/evaluator.hpp"
#include "ndrl/gat_encoder.hpp"
#include "ndrl/kg_store.hpp"
#include "ndrl/linalg.hpp"
#include "ndrl/model.hpp"
#include "ndrl/negative_sampling.hpp"
#include "ndrl/objective.hpp"
#include "ndrl/orc.hpp"
#include "ndrl/pipeline.hpp"
#include "ndrl/synthetic.hpp"
#include "ndrl/text_io.hpp"
#include "ndrl/trainer.hpp"
#include "ndrl/transe.hpp"

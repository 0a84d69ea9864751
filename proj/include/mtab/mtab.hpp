#pragma once

#include "mtab/adapt.hpp"
#include "mtab/adversarial.hpp"
#include "mtab/checkpoint.hpp"
#include "mtab/classifier.hpp"
#include "mtab/clean.hpp"
#include "mtab/core.hpp"
#include "mtab/corpus_ops.hpp"
#include "mtab/encoder.hpp"
#include "mtab/fs.hpp"
#include "mtab/jsonl.hpp"
#include "mtab/labels.hpp"
#include "mtab/manifest.hpp"
#include "mtab/metrics.hpp"
#include "mtab/optimizer.hpp"
#include "mtab/pseudo_lang.hpp"
#include "mtab/records.hpp"
#include "mtab/report.hpp"
#include "mtab/rng.hpp"
#include "mtab/synth.hpp"
#include "mtab/tensor.hpp"
#include "mtab/tokenizer.hpp"
#include "mtab/train.hpp"
#include "mtab/translate.hpp"
#include "mtab/variants.hpp"

// Copyright 2026 The distclip Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "distclip/autodiff/gradcheck.hpp"
#include "distclip/autodiff/kernels.hpp"
#include "distclip/autodiff/ops.hpp"
#include "distclip/autodiff/tape.hpp"
#include "distclip/core/error.hpp"
#include "distclip/core/random.hpp"
#include "distclip/core/tensor.hpp"
#include "distclip/data/augment.hpp"
#include "distclip/data/image.hpp"
#include "distclip/data/languages.hpp"
#include "distclip/data/manifest.hpp"
#include "distclip/data/prompts.hpp"
#include "distclip/data/sampling.hpp"
#include "distclip/data/tokenizer.hpp"
#include "distclip/eval/corpus.hpp"
#include "distclip/eval/lmcap.hpp"
#include "distclip/eval/retrieval.hpp"
#include "distclip/eval/splits.hpp"
#include "distclip/eval/zero_shot.hpp"
#include "distclip/model/config.hpp"
#include "distclip/model/embed.hpp"
#include "distclip/model/encoders.hpp"
#include "distclip/model/params.hpp"
#include "distclip/model/resize.hpp"
#include "distclip/objectives/losses.hpp"
#include "distclip/objectives/teacher.hpp"
#include "distclip/train/checkpoint.hpp"
#include "distclip/train/config.hpp"
#include "distclip/train/optim.hpp"
#include "distclip/train/trainer.hpp"

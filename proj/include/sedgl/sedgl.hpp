// Copyright 2026 The sedgl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#pragma once

#include "sedgl/audio.hpp"
#include "sedgl/checkpoint.hpp"
#include "sedgl/common.hpp"
#include "sedgl/config.hpp"
#include "sedgl/corpus.hpp"
#include "sedgl/disentangled.hpp"
#include "sedgl/features.hpp"
#include "sedgl/inference.hpp"
#include "sedgl/metrics.hpp"
#include "sedgl/model.hpp"
#include "sedgl/nn.hpp"
#include "sedgl/pipeline.hpp"
#include "sedgl/plot.hpp"
#include "sedgl/toy.hpp"
#include "sedgl/trainer.hpp"

// Copyright 2026 The Lookalike Authors.
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

#include "lookalike/config.hpp"
#include "lookalike/core.hpp"
#include "lookalike/encoders.hpp"
#include "lookalike/evaluation.hpp"
#include "lookalike/expansion.hpp"
#include "lookalike/experiment.hpp"
#include "lookalike/fusion.hpp"
#include "lookalike/kg_store.hpp"
#include "lookalike/losses.hpp"
#include "lookalike/pipeline.hpp"
#include "lookalike/synthgen.hpp"
#include "lookalike/trainer.hpp"

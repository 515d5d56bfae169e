// Copyright 2026 The VTT Authors.
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

#include "vtt/error.hpp"
#include "vtt/eval.hpp"
#include "vtt/overlap.hpp"
#include "vtt/parallel.hpp"
#include "vtt/params.hpp"
#include "vtt/random.hpp"
#include "vtt/segment.hpp"
#include "vtt/tensor.hpp"
#include "vtt/tensorio.hpp"
#include "vtt/trainer.hpp"
#include "vtt/transplant.hpp"
#include "vtt/utf8.hpp"
#include "vtt/vocab.hpp"

// hme/hme.hpp -- umbrella header.
//
// Copyright 2026 The hmevb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HME_HME_HPP
#define HME_HME_HPP

#include "hme/baseline.hpp"
#include "hme/config.hpp"
#include "hme/data.hpp"
#include "hme/engine.hpp"
#include "hme/logistic_bound.hpp"
#include "hme/model.hpp"
#include "hme/posterior.hpp"
#include "hme/predict.hpp"
#include "hme/selection.hpp"
#include "hme/tree.hpp"
#include "hme/util.hpp"

#endif  // HME_HME_HPP

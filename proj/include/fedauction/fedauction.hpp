#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The fedauction Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "fedauction/conflict_graph.hpp"
#include "fedauction/drl_training.hpp"
#include "fedauction/drla.hpp"
#include "fedauction/errors.hpp"
#include "fedauction/exact_oracle.hpp"
#include "fedauction/experiments.hpp"
#include "fedauction/fedsim.hpp"
#include "fedauction/io.hpp"
#include "fedauction/market_model.hpp"
#include "fedauction/mechanism_properties.hpp"
#include "fedauction/nn_core.hpp"
#include "fedauction/rma.hpp"

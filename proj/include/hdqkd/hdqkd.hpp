// Copyright 2026 The hdqkd Authors
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

#pragma once

#include "hdqkd/csv.hpp"
#include "hdqkd/detector.hpp"
#include "hdqkd/errors.hpp"
#include "hdqkd/montecarlo.hpp"
#include "hdqkd/protocol.hpp"
#include "hdqkd/random.hpp"
#include "hdqkd/reconstruct.hpp"
#include "hdqkd/security.hpp"
#include "hdqkd/tau_optimizer.hpp"
#include "hdqkd/version.hpp"

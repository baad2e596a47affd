// Copyright (c) 2026 The fdrlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0.txt
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// Umbrella header for the numerical library (no I/O).

#pragma once

#include "fdrlab/correlation.hpp"
#include "fdrlab/equilibrium.hpp"
#include "fdrlab/errors.hpp"
#include "fdrlab/linalg.hpp"
#include "fdrlab/mean_dynamics.hpp"
#include "fdrlab/model.hpp"
#include "fdrlab/parallel.hpp"
#include "fdrlab/propagator.hpp"
#include "fdrlab/response.hpp"
#include "fdrlab/spectrum.hpp"
#include "fdrlab/version.hpp"

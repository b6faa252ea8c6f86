/*
 * Copyright 2026 The sirgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef SIRGP_SIRGP_HPP
#define SIRGP_SIRGP_HPP

#include "sirgp/config_file.hpp"
#include "sirgp/data_io.hpp"
#include "sirgp/densities.hpp"
#include "sirgp/diagnostics.hpp"
#include "sirgp/draws_io.hpp"
#include "sirgp/error.hpp"
#include "sirgp/forecast.hpp"
#include "sirgp/gp.hpp"
#include "sirgp/identifiability.hpp"
#include "sirgp/model.hpp"
#include "sirgp/priors.hpp"
#include "sirgp/random.hpp"
#include "sirgp/sampler.hpp"
#include "sirgp/scenarios.hpp"
#include "sirgp/stats.hpp"

#endif  // SIRGP_SIRGP_HPP

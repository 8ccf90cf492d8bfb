// SPDX-License-Identifier: Apache-2.0
//
// nfsec: secure near-field XL-MIMO downlink simulation
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "nfsec/channel.hpp"
#include "nfsec/precoders.hpp"
#include "nfsec/secrecy.hpp"
#include "nfsec/surrogate.hpp"
#include "nfsec/sca.hpp"
#include "nfsec/power.hpp"
#include "nfsec/algorithm.hpp"
#include "nfsec/experiment.hpp"
#include "nfsec/artifacts.hpp"

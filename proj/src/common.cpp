// Copyright 2026 The kpgen Authors
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

#include "kpgen/tensor.hpp"

namespace kpgen {

namespace {
bool g_debug_checks = false;
}

bool debug_checks_enabled() { return g_debug_checks; }

void set_debug_checks(bool on) { g_debug_checks = on; }

}  // namespace kpgen

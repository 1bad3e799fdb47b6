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
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#ifndef KPGEN_STEMMER_HPP_
#define KPGEN_STEMMER_HPP_

#include <string>

namespace kpgen {

// Porter stemmer over lowercase ASCII words (the original 1980 rule set,
// without later revisions). Words shorter than three letters and tokens
// containing anything outside a-z pass through unchanged.
std::string porter_stem(const std::string& word);

}  // namespace kpgen

#endif  // KPGEN_STEMMER_HPP_

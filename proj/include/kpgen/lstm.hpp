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

#pragma once

#include "kpgen/tape.hpp"

namespace kpgen {

// One LSTM step. The four gates share a single weight matrix
// w: [4*hidden x (input+hidden)] and bias b: [1 x 4*hidden], packed in the
// order input, forget, candidate, output.
template <typename T>
struct LstmState {
  Var h;  // [1 x hidden]
  Var c;  // [1 x hidden]
};

template <typename T>
LstmState<T> lstm_step(Tape<T>& tape, Var w, Var b, Var x,
                       const LstmState<T>& prev, std::size_t hidden) {
  Var xh = tape.concat({x, prev.h});
  Var gates = tape.add(tape.matmul_nt(xh, w), b);
  Var i = tape.sigmoid(tape.slice(gates, 0, hidden));
  Var f = tape.sigmoid(tape.slice(gates, hidden, hidden));
  Var g = tape.tanh(tape.slice(gates, 2 * hidden, hidden));
  Var o = tape.sigmoid(tape.slice(gates, 3 * hidden, hidden));
  Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return {h, c};
}

}  // namespace kpgen

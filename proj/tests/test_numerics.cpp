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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "gradcheck.hpp"
#include "kpgen/adam.hpp"
#include "kpgen/lstm.hpp"
#include "kpgen/rng.hpp"
#include "kpgen/tape.hpp"
#include "kpgen/tensor.hpp"

using namespace kpgen;

namespace {

struct DebugChecksGuard {
  explicit DebugChecksGuard(bool on) { set_debug_checks(on); }
  ~DebugChecksGuard() { set_debug_checks(false); }
};

}  // namespace

TEST_CASE("tensor shape validation") {
  CHECK_THROWS_AS(Tensor<double>({2, 2}, {1.0, 2.0, 3.0}), DimError);
  CHECK_THROWS_AS(Tensor<double>({1, 0}), DimError);
  Tensor<double> t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(0, 2) == 3.0);
  CHECK(t.at(1, 0) == 4.0);
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(Tensor<double>::scalar(7.0).numel() == 1);
}

TEST_CASE("debug checks catch non-finite values") {
  {
    DebugChecksGuard g(true);
    CHECK_THROWS_AS(
        Tensor<double>({1, 2}, {1.0, std::numeric_limits<double>::quiet_NaN()}),
        NumericError);
    Tape<double> t;
    Var v = t.leaf(Tensor<double>::row({-1.0}));
    CHECK_THROWS_AS(t.log(v), NumericError);
  }
  // Disabled: construction passes unchecked.
  Tensor<double> ok({1, 1}, {std::numeric_limits<double>::infinity()});
  CHECK(ok.numel() == 1);
}

TEST_CASE("rng determinism, streams, serialization") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c(42);
  for (int i = 0; i < 1000; ++i) {
    double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 200; ++i) {
    std::int64_t v = c.uniform_int(std::int64_t(-3), std::int64_t(5));
    CHECK(v >= -3);
    CHECK(v <= 5);
  }

  Rng s0 = Rng::stream(7, 0), s1 = Rng::stream(7, 1);
  CHECK(s0.next_u64() != s1.next_u64());

  Rng d(99);
  d.next_u64();
  std::string state = d.serialize();
  std::uint64_t expected = d.next_u64();
  Rng e(0);
  e.deserialize(state);
  CHECK(e.next_u64() == expected);

  std::vector<int> perm(20);
  std::iota(perm.begin(), perm.end(), 0);
  Rng f(5);
  f.shuffle(perm);
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
  std::vector<int> perm2(20);
  std::iota(perm2.begin(), perm2.end(), 0);
  Rng f2(5);
  f2.shuffle(perm2);
  CHECK(perm == perm2);
}

TEST_CASE("matmul fixed products") {
  Tape<double> t;
  Var eye = t.constant(Tensor<double>({2, 2}, {1, 0, 0, 1}));
  Var a = t.constant(Tensor<double>({2, 2}, {1, 2, 3, 4}));
  Var prod = t.matmul(eye, a);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(t.value(prod)[i] == t.value(a)[i]);

  Var u = t.constant(Tensor<double>({1, 2}, {1, 2}));
  Var v = t.constant(Tensor<double>({2, 1}, {3, 4}));
  CHECK(t.value(t.matmul(u, v))[0] == doctest::Approx(11.0).epsilon(1e-12));

  CHECK_THROWS_AS(t.matmul(v, a), DimError);  // [2x1]*[2x2] inner mismatch
}

TEST_CASE("softmax fixed values and properties") {
  Tape<double> t;
  Var z0 = t.constant(Tensor<double>::row({0.0, 0.0}));
  Var s0 = t.softmax(z0);
  CHECK(t.value(s0)[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.value(s0)[1] == doctest::Approx(0.5).epsilon(1e-12));

  // Direct 64-bit evaluation of exp(z_i - max) / sum.
  Var z = t.constant(Tensor<double>::row({1.0, 2.0, 3.0}));
  Var s = t.softmax(z);
  CHECK(std::abs(t.value(s)[0] - 0.09003057317038046) < 1e-7);
  CHECK(std::abs(t.value(s)[1] - 0.24472847105479764) < 1e-7);
  CHECK(std::abs(t.value(s)[2] - 0.6652409557748218) < 1e-7);

  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    Tensor<double> logits = rand_tensor(rng, {1, 7}, -30.0, 30.0);
    double shift = rng.uniform(-100.0, 100.0);
    Tensor<double> shifted = logits;
    for (double& x : shifted.data) x += shift;
    Tape<double> t2;
    Var p = t2.softmax(t2.constant(logits));
    Var q = t2.softmax(t2.constant(shifted));
    double total = 0.0;
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK(t2.value(p)[i] > 0.0);
      CHECK(std::abs(t2.value(p)[i] - t2.value(q)[i]) < 1e-12);
      total += t2.value(p)[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
  }

  Tape<double> t3;
  Var empty = t3.constant(Tensor<double>());
  CHECK_THROWS_AS(t3.softmax(empty), DimError);
}

TEST_CASE("lstm zero case") {
  Tape<double> t;
  Var w = t.constant(Tensor<double>::zeros(8, 4));
  Var b = t.constant(Tensor<double>::zeros(1, 8));
  Var x = t.constant(Tensor<double>::zeros(1, 2));
  LstmState<double> prev{t.constant(Tensor<double>::zeros(1, 2)),
                         t.constant(Tensor<double>::zeros(1, 2))};
  LstmState<double> next = lstm_step(t, w, b, x, prev, 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(t.value(next.h)[i] == 0.0);
    CHECK(t.value(next.c)[i] == 0.0);
  }
}

TEST_CASE("lstm scalar cell matches hand evaluation") {
  // Hidden size 1, gates packed input/forget/candidate/output:
  // pre-activations 0.62, -0.2, -0.34, 0.57 for x=0.8, h=-0.4, c=0.25.
  Tape<double> t;
  Var w = t.constant(
      Tensor<double>({4, 2}, {0.5, -0.3, 0.2, 0.4, -0.5, 0.6, 0.7, 0.1}));
  Var b = t.constant(Tensor<double>::row({0.1, -0.2, 0.3, 0.05}));
  Var x = t.constant(Tensor<double>::row({0.8}));
  LstmState<double> prev{t.constant(Tensor<double>::row({-0.4})),
                         t.constant(Tensor<double>::row({0.25}))};
  LstmState<double> next = lstm_step(t, w, b, x, prev, 1);
  CHECK(std::abs(t.value(next.c)[0] - (-0.10039037567137399)) < 1e-7);
  CHECK(std::abs(t.value(next.h)[0] - (-0.06391111564701035)) < 1e-7);
}

TEST_CASE("lstm cell gradient vs finite differences") {
  double err = run_seeds([](Rng& rng) {
    const std::size_t hidden = 2, input = 3;
    Tensor<double> w = rand_tensor(rng, {4 * hidden, input + hidden}, -1, 1);
    Tensor<double> b = rand_tensor(rng, {1, 4 * hidden}, -0.5, 0.5);
    Tensor<double> x = rand_tensor(rng, {1, input}, -1, 1);
    Tensor<double> h0 = rand_tensor(rng, {1, hidden}, -1, 1);
    Tensor<double> c0 = rand_tensor(rng, {1, hidden}, -1, 1);
    Tensor<double> wh = rand_tensor(rng, {1, hidden}, 0.5, 1.5);
    Tensor<double> wc = rand_tensor(rng, {1, hidden}, 0.5, 1.5);
    return OpCheck{
        {w, b, x, h0, c0},
        [wh, wc, hidden](Tape<double>& t, const std::vector<Var>& v) {
          LstmState<double> prev{v[3], v[4]};
          LstmState<double> next =
              lstm_step(t, v[0], v[1], v[2], prev, hidden);
          Var lh = t.sum(t.mul(next.h, t.constant(wh)));
          Var lc = t.sum(t.mul(next.c, t.constant(wc)));
          return t.sum_vars({lh, lc});
        }};
  });
  CHECK(err < 1e-4);
}

TEST_CASE("gradients of linear ops vs finite differences") {
  SUBCASE("matmul") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> a = rand_tensor(rng, {3, 4}, -1, 1);
      Tensor<double> b = rand_tensor(rng, {4, 2}, -1, 1);
      Tensor<double> w = rand_tensor(rng, {3, 2}, 0.5, 1.5);
      return OpCheck{{a, b},
                     [w](Tape<double>& t, const std::vector<Var>& v) {
                       return t.sum(t.mul(t.matmul(v[0], v[1]),
                                          t.constant(w)));
                     }};
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("matmul_nt") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> a = rand_tensor(rng, {3, 4}, -1, 1);
      Tensor<double> b = rand_tensor(rng, {2, 4}, -1, 1);
      Tensor<double> w = rand_tensor(rng, {3, 2}, 0.5, 1.5);
      return OpCheck{{a, b},
                     [w](Tape<double>& t, const std::vector<Var>& v) {
                       return t.sum(t.mul(t.matmul_nt(v[0], v[1]),
                                          t.constant(w)));
                     }};
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("add and mul") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> a = rand_tensor(rng, {2, 3}, -1, 1);
      Tensor<double> b = rand_tensor(rng, {2, 3}, -1, 1);
      Tensor<double> w = rand_tensor(rng, {2, 3}, 0.5, 1.5);
      return OpCheck{{a, b},
                     [w](Tape<double>& t, const std::vector<Var>& v) {
                       Var s = t.add(v[0], v[1]);
                       Var m = t.mul(s, v[0]);
                       return t.sum(t.mul(m, t.constant(w)));
                     }};
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("smul and affine") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> s = Tensor<double>::scalar(rng.uniform(-2, 2));
      Tensor<double> v = rand_tensor(rng, {1, 6}, -1, 1);
      Tensor<double> w = rand_tensor(rng, {1, 6}, 0.5, 1.5);
      return OpCheck{{s, v},
                     [w](Tape<double>& t, const std::vector<Var>& vs) {
                       Var r = t.smul(vs[0], t.affine(vs[1], 1.7, -0.3));
                       return t.sum(t.mul(r, t.constant(w)));
                     }};
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("concat slice row stack") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> a = rand_tensor(rng, {1, 3}, -1, 1);
      Tensor<double> b = rand_tensor(rng, {1, 2}, -1, 1);
      Tensor<double> m = rand_tensor(rng, {4, 3}, -1, 1);
      Tensor<double> w = rand_tensor(rng, {2, 4}, 0.5, 1.5);
      return OpCheck{{a, b, m},
                     [w](Tape<double>& t, const std::vector<Var>& v) {
                       Var cat = t.concat({v[0], v[1]});       // [1x5]
                       Var sl = t.slice(cat, 1, 4);            // [1x4]
                       Var r2 = t.row(v[2], 2);                // [1x3]
                       Var r2b = t.row(v[2], 2);               // same row twice
                       Var rr = t.concat({r2, t.slice(r2b, 0, 1)});  // [1x4]
                       Var st = t.stack_rows({sl, rr});
                       return t.sum(t.mul(st, t.constant(w)));
                     }};
    });
    CHECK(err < 1e-6);
  }
  SUBCASE("pick gather scatter pad sum_vars") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> v = rand_tensor(rng, {1, 5}, -1, 1);
      Tensor<double> w = rand_tensor(rng, {1, 6}, 0.5, 1.5);
      return OpCheck{{v},
                     [w](Tape<double>& t, const std::vector<Var>& vs) {
                       Var g = t.gather(vs[0], {0, 3, 3, 1});
                       Var sc = t.scatter_sum(vs[0], {2, 0, 2, 4, 0}, 6);
                       Var pd = t.pad(g, 6);
                       Var l1 = t.sum(t.mul(sc, t.constant(w)));
                       Var l2 = t.sum(t.mul(pd, t.constant(w)));
                       Var p1 = t.pick(vs[0], 1);
                       Var p2 = t.pick(vs[0], 1);
                       return t.sum_vars({l1, l2, p1, p2});
                     }};
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("gradients of nonlinear ops vs finite differences") {
  SUBCASE("sigmoid tanh") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> v = rand_tensor(rng, {1, 5}, -2, 2);
      Tensor<double> w = rand_tensor(rng, {1, 5}, 0.5, 1.5);
      return OpCheck{{v},
                     [w](Tape<double>& t, const std::vector<Var>& vs) {
                       Var a = t.sigmoid(vs[0]);
                       Var b = t.tanh(vs[0]);
                       return t.sum(t.mul(t.mul(a, b), t.constant(w)));
                     }};
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("softmax") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> v = rand_tensor(rng, {1, 5}, -2, 2);
      Tensor<double> w = rand_tensor(rng, {1, 5}, 0.5, 1.5);
      return OpCheck{{v},
                     [w](Tape<double>& t, const std::vector<Var>& vs) {
                       return t.sum(
                           t.mul(t.softmax(vs[0]), t.constant(w)));
                     }};
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("log") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> v = rand_tensor(rng, {1, 5}, 0.2, 2.0);
      Tensor<double> w = rand_tensor(rng, {1, 5}, 0.5, 1.5);
      return OpCheck{{v},
                     [w](Tape<double>& t, const std::vector<Var>& vs) {
                       return t.sum(t.mul(t.log(vs[0]), t.constant(w)));
                     }};
    });
    CHECK(err < 1e-4);
  }
  SUBCASE("clamp interior") {
    double err = run_seeds([](Rng& rng) {
      Tensor<double> v = rand_tensor(rng, {1, 5}, -0.4, 0.4);
      Tensor<double> w = rand_tensor(rng, {1, 5}, 0.5, 1.5);
      return OpCheck{{v},
                     [w](Tape<double>& t, const std::vector<Var>& vs) {
                       return t.sum(t.mul(t.clamp(vs[0], -0.5, 0.5),
                                          t.constant(w)));
                     }};
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("composite generation head gradient") {
  // Attention scores, context, projection, generation gate, copy scatter,
  // mixture, clamped logs of p and 1-p: the full differentiable path a
  // decoding step uses, checked end to end.
  double err = run_seeds([](Rng& rng) {
    Tensor<double> s = rand_tensor(rng, {1, 3}, -1, 1);
    Tensor<double> H = rand_tensor(rng, {4, 5}, -1, 1);
    Tensor<double> Wa = rand_tensor(rng, {3, 5}, -1, 1);
    Tensor<double> Wu = rand_tensor(rng, {3, 8}, -1, 1);
    Tensor<double> bu = rand_tensor(rng, {1, 3}, -0.3, 0.3);
    Tensor<double> Wv = rand_tensor(rng, {6, 3}, -1, 1);
    Tensor<double> bv = rand_tensor(rng, {1, 6}, -0.3, 0.3);
    Tensor<double> Wc = rand_tensor(rng, {1, 8}, -1, 1);
    Tensor<double> bc = rand_tensor(rng, {1, 1}, -0.3, 0.3);
    Tensor<double> w1 = rand_tensor(rng, {1, 8}, 0.5, 1.5);
    Tensor<double> w2 = rand_tensor(rng, {1, 8}, 0.5, 1.5);
    return OpCheck{
        {s, H, Wa, Wu, bu, Wv, bv, Wc, bc},
        [w1, w2](Tape<double>& t, const std::vector<Var>& v) {
          Var proj = t.matmul(v[0], v[2]);            // [1x5]
          Var scores = t.matmul_nt(proj, v[1]);       // [1x4]
          Var alpha = t.softmax(scores);
          Var ctx = t.matmul(alpha, v[1]);            // [1x5]
          Var sc = t.concat({v[0], ctx});             // [1x8]
          Var ut = t.tanh(t.add(t.matmul_nt(sc, v[3]), v[4]));
          Var pt = t.softmax(t.add(t.matmul_nt(ut, v[5]), v[6]));
          Var pg = t.sigmoid(t.add(t.matmul_nt(sc, v[7]), v[8]));
          Var pcopy = t.scatter_sum(alpha, {5, 6, 1, 6}, 8);
          Var mix = t.add(t.smul(pg, t.pad(pt, 8)),
                          t.smul(t.affine(pg, -1.0, 1.0), pcopy));
          Var lp = t.log(t.clamp(mix, 1e-7, 1.0 - 1e-7));
          Var lq = t.log(t.clamp(t.affine(mix, -1.0, 1.0), 1e-7, 1.0 - 1e-7));
          Var l1 = t.sum(t.mul(lp, t.constant(w1)));
          Var l2 = t.sum(t.mul(lq, t.constant(w2)));
          return t.sum_vars({l1, l2});
        }};
  });
  CHECK(err < 1e-4);
}

TEST_CASE("clamp passes no gradient outside the interval") {
  Tape<double> t;
  Var v = t.leaf(Tensor<double>::row({-2.0, 0.1, 3.0}));
  Var loss = t.sum(t.clamp(v, -0.5, 0.5));
  t.backward(loss);
  CHECK(t.grad(v)[0] == 0.0);
  CHECK(t.grad(v)[1] == 1.0);
  CHECK(t.grad(v)[2] == 0.0);
}

TEST_CASE("clamp propagates non-finite values instead of hiding them") {
  Tape<double> t;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  Var v = t.constant(Tensor<double>({1, 3}, {nan, inf, -inf}));
  Var c = t.clamp(v, 0.1, 0.9);
  CHECK(std::isnan(t.value(c)[0]));
  CHECK(t.value(c)[1] == 0.9);
  CHECK(t.value(c)[2] == 0.1);
}

TEST_CASE("gradients accumulate across consumers") {
  Tape<double> t;
  Var v = t.leaf(Tensor<double>::row({1.5, -0.5}));
  Var loss = t.sum_vars({t.sum(v), t.sum(v), t.sum(t.mul(v, v))});
  t.backward(loss);
  CHECK(t.grad(v)[0] == doctest::Approx(2.0 + 3.0).epsilon(1e-12));
  CHECK(t.grad(v)[1] == doctest::Approx(2.0 - 1.0).epsilon(1e-12));
}

TEST_CASE("gradient storage appears only after backward") {
  Tape<double> t;
  Var v = t.leaf(Tensor<double>::row({1.0, 2.0}));
  Var c = t.constant(Tensor<double>::row({3.0, 4.0}));
  Var m = t.mul(v, c);
  CHECK(t.grad(v).numel() == 0);
  CHECK(t.grad(m).numel() == 0);
  Var loss = t.sum(m);
  t.backward(loss);
  CHECK(t.grad(v).numel() == 2);
  CHECK(t.grad(c).numel() == 0);  // constants never hold gradients
  CHECK(t.grad(v)[0] == 3.0);
  CHECK(t.grad(v)[1] == 4.0);
}

TEST_CASE("tape replay is bit-deterministic") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Tensor<double> a = rand_tensor(rng, {3, 4}, -1, 1);
    Tensor<double> b = rand_tensor(rng, {2, 4}, -1, 1);
    Tape<double> t;
    Var va = t.leaf(a), vb = t.leaf(b);
    Var loss = t.sum(t.tanh(t.matmul_nt(va, vb)));
    t.backward(loss);
    std::vector<double> out = t.grad(va).data;
    out.insert(out.end(), t.grad(vb).data.begin(), t.grad(vb).data.end());
    out.push_back(t.value(loss)[0]);
    return out;
  };
  std::vector<double> r1 = run(17), r2 = run(17);
  REQUIRE(r1.size() == r2.size());
  CHECK(std::memcmp(r1.data(), r2.data(), r1.size() * sizeof(double)) == 0);
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  Tensor<double> p({2, 2}, {1, 2, 3, 4});
  Tensor<double> g({2, 2});
  Adam<double> opt;
  opt.step({&p}, {&g});
  CHECK(p[0] == 1.0);
  CHECK(p[3] == 4.0);
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam first step matches closed form") {
  // g=1 fresh state: m-hat = v-hat = 1, so the step is lr/(1+eps).
  Tensor<double> p = Tensor<double>::scalar(0.5);
  Tensor<double> g = Tensor<double>::scalar(1.0);
  Adam<double> opt;
  opt.step({&p}, {&g});
  CHECK(std::abs(p[0] - 0.49900000001) < 1e-10);
}

TEST_CASE("adam is deterministic and validates shapes") {
  auto run = [] {
    Rng rng(3);
    Tensor<float> p({3, 3});
    for (auto& x : p.data) x = static_cast<float>(rng.uniform(-1, 1));
    Adam<float> opt;
    for (int i = 0; i < 25; ++i) {
      Tensor<float> g({3, 3});
      for (auto& x : g.data) x = static_cast<float>(rng.uniform(-1, 1));
      opt.step({&p}, {&g});
    }
    return p.data;
  };
  std::vector<float> a = run(), b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);

  Tensor<double> p({2, 2});
  Tensor<double> bad({1, 2});
  Adam<double> opt;
  CHECK_THROWS_AS(opt.step({&p}, {&bad}), DimError);
}

TEST_CASE("global norm clipping") {
  Tensor<double> g1 = Tensor<double>::row({3.0});
  Tensor<double> g2 = Tensor<double>::row({4.0});
  CHECK(clip_global_norm<double>({&g1, &g2}, 5.0) ==
        doctest::Approx(5.0).epsilon(1e-12));
  CHECK(g1[0] == 3.0);
  CHECK(g2[0] == 4.0);

  Tensor<double> h1 = Tensor<double>::row({6.0});
  Tensor<double> h2 = Tensor<double>::row({8.0});
  CHECK(clip_global_norm<double>({&h1, &h2}, 5.0) ==
        doctest::Approx(10.0).epsilon(1e-12));
  CHECK(h1[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(h2[0] == doctest::Approx(4.0).epsilon(1e-12));
}

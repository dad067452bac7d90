#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "xslu/gradcheck.hpp"
#include "xslu/optim.hpp"
#include "xslu/rng.hpp"
#include "xslu/tensor.hpp"

using namespace xslu;

namespace {

TensorPtr random_tensor(SplitMix64& rng, std::vector<std::size_t> shape,
                        double lo, double hi, bool requires_grad = false) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> values(n);
  for (double& v : values) v = rng.uniform(lo, hi);
  return make_tensor(std::move(shape), std::move(values), requires_grad);
}

}  // namespace

TEST_CASE("softmax forward") {
  Tape tape;
  SUBCASE("symmetry") {
    auto y = tape.softmax(make_tensor({2}, {0.0, 0.0}));
    CHECK(y->values[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y->values[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("frozen values for [1,2,3]") {
    auto y = tape.softmax(make_tensor({3}, {1.0, 2.0, 3.0}));
    CHECK(std::fabs(y->values[0] - 0.09003057317038046) < 1e-5);
    CHECK(std::fabs(y->values[1] - 0.24472847105479764) < 1e-5);
    CHECK(std::fabs(y->values[2] - 0.66524095577482190) < 1e-5);
  }
  SUBCASE("rows sum to one and entries lie in (0,1)") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      auto x = random_tensor(rng, {4, 6}, -30.0, 30.0);
      auto y = tape.softmax(x);
      for (std::size_t r = 0; r < 4; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
          const double p = y->values[r * 6 + j];
          CHECK(p > 0.0);
          CHECK(p < 1.0);
          sum += p;
        }
        CHECK(std::fabs(sum - 1.0) <= 1e-9);
      }
    }
  }
  SUBCASE("non-finite input is rejected") {
    CHECK_THROWS(tape.softmax(
        make_tensor({2}, {1.0, std::numeric_limits<double>::infinity()})));
  }
}

TEST_CASE("matmul against identity") {
  Tape tape;
  auto eye = make_tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  SplitMix64 rng(4);
  auto a = random_tensor(rng, {3, 5}, -2, 2);
  auto out = tape.matmul(eye, a);
  CHECK(out->values == a->values);
  CHECK_THROWS_WITH(tape.matmul(a, eye),
                    doctest::Contains("matmul: shape mismatch"));
}

TEST_CASE("log domain") {
  Tape tape;
  CHECK_THROWS_WITH(tape.log(make_tensor({2}, {1.0, 0.0})),
                    doctest::Contains("log: domain error"));
  auto y = tape.log(make_tensor({1}, {std::exp(1.0)}));
  CHECK(y->values[0] == doctest::Approx(1.0));
}

TEST_CASE("backward basics") {
  SUBCASE("sum gives all-ones") {
    Tape tape;
    auto x = make_param({2, 3}, {1, 2, 3, 4, 5, 6});
    auto root = tape.sum_all(x);
    tape.backward(root);
    for (double g : *x->grad) CHECK(g == 1.0);
  }
  SUBCASE("mean of four gives quarters") {
    Tape tape;
    auto x = make_param({4}, {1, 2, 3, 4});
    tape.backward(tape.mean_all(x));
    for (double g : *x->grad) CHECK(g == 0.25);
  }
  SUBCASE("cross-entropy of softmax recovers softmax minus one-hot") {
    // frozen via an independent high-precision evaluation of e^x/sum e^x
    Tape tape;
    auto logits = make_param({3}, {1.0, 2.0, 3.0});
    auto probs = tape.softmax(logits);
    auto onehot = make_tensor({3}, {1.0, 0.0, 0.0});
    auto ce = tape.scale(tape.sum_all(tape.mul(onehot, tape.log(probs))), -1.0);
    tape.backward(ce);
    CHECK(std::fabs((*logits->grad)[0] - (-0.90996942682961954)) < 1e-5);
    CHECK(std::fabs((*logits->grad)[1] - 0.24472847105479764) < 1e-5);
    CHECK(std::fabs((*logits->grad)[2] - 0.66524095577482190) < 1e-5);
  }
  SUBCASE("non-scalar root is rejected") {
    Tape tape;
    auto x = make_param({2}, {1.0, 2.0});
    auto y = tape.scale(x, 2.0);
    CHECK_THROWS_WITH(tape.backward(y), doctest::Contains("must be scalar"));
  }
  SUBCASE("root must come from the tape") {
    Tape tape;
    auto x = make_param({1}, {1.0});
    CHECK_THROWS_WITH(tape.backward(x), doctest::Contains("not produced"));
  }
}

TEST_CASE("fan-out accumulates both paths") {
  Tape tape;
  auto x = make_param({3}, {0.5, -1.0, 2.0});
  // y = sum(x * x) + sum(x): dy/dx = 2x + 1
  auto root = tape.add(tape.sum_all(tape.mul(x, x)), tape.sum_all(x));
  tape.backward(root);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((*x->grad)[i] == doctest::Approx(2.0 * x->values[i] + 1.0).epsilon(1e-12));
  }

  // and the same against central finite differences
  auto f = [](Tape& t, const std::vector<TensorPtr>& in) {
    return t.add(t.sum_all(t.mul(in[0], in[0])), t.sum_all(in[0]));
  };
  auto report = grad_check(f, {make_tensor({3}, {0.5, -1.0, 2.0})}, 1e-6, 1e-4);
  CHECK(report.pass);
}

TEST_CASE("grad_check contract") {
  auto sum_sq = [](Tape& t, const std::vector<TensorPtr>& in) {
    return t.sum_all(t.mul(in[0], in[0]));
  };
  SUBCASE("analytic matches numeric for sum of squares") {
    auto report = grad_check(sum_sq, {make_tensor({2}, {1.0, 2.0})}, 1e-6, 1e-4);
    CHECK(report.pass);
    CHECK(report.coords_checked == 2);
    CHECK(report.max_rel_err < 1e-6);

    // analytic gradient is [2, 4]
    Tape tape;
    auto x = make_param({2}, {1.0, 2.0});
    tape.backward(tape.sum_all(tape.mul(x, x)));
    CHECK((*x->grad)[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK((*x->grad)[1] == doctest::Approx(4.0).epsilon(1e-9));
  }
  SUBCASE("a deliberately wrong backward rule fails") {
    auto bad_square = [](Tape& t, const std::vector<TensorPtr>& in) {
      const TensorPtr& x = in[0];
      auto out = t.alloc(x->shape, x->requires_grad);
      for (std::size_t i = 0; i < x->numel(); ++i) {
        out->values[i] = x->values[i] * x->values[i];
      }
      t.push_backward([x, out] {
        if (!out->grad) return;
        auto& xg = x->grad_buffer();
        // wrong rule: 3x instead of 2x
        for (std::size_t i = 0; i < x->numel(); ++i) {
          xg[i] += 3.0 * x->values[i] * (*out->grad)[i];
        }
      });
      return t.sum_all(out);
    };
    auto report = grad_check(bad_square, {make_tensor({2}, {1.0, 2.0})}, 1e-6, 1e-4);
    CHECK(!report.pass);
    CHECK(!report.failures.empty());
  }
  SUBCASE("h outside [1e-7, 1e-4] is rejected") {
    CHECK_THROWS(grad_check(sum_sq, {make_tensor({1}, {1.0})}, 1e-3, 1e-4));
    CHECK_THROWS(grad_check(sum_sq, {make_tensor({1}, {1.0})}, 1e-8, 1e-4));
  }
}

TEST_CASE("broadcast add and mul") {
  Tape tape;
  auto x = make_param({2, 3}, {1, 2, 3, 4, 5, 6});
  auto b = make_param({3}, {10, 20, 30});
  SUBCASE("add broadcasts over the leading axis") {
    auto y = tape.add(x, b);
    CHECK(y->values == std::vector<double>{11, 22, 33, 14, 25, 36});
    tape.backward(tape.sum_all(y));
    CHECK(*b->grad == std::vector<double>{2, 2, 2});
    CHECK(*x->grad == std::vector<double>(6, 1.0));
  }
  SUBCASE("mismatched shapes name the op and both shapes") {
    auto bad = make_tensor({2}, {1, 2});
    CHECK_THROWS_WITH(tape.add(x, bad), doctest::Contains("add: shape mismatch"));
    CHECK_THROWS_WITH(tape.mul(x, bad), doctest::Contains("mul: shape mismatch"));
  }
}

TEST_CASE("embedding gather forward and scatter-add backward") {
  Tape tape;
  auto table = make_param({4, 2}, {0, 1, 10, 11, 20, 21, 30, 31});
  auto out = tape.embedding_gather(table, {2, 0, 2});
  CHECK(out->values == std::vector<double>{20, 21, 0, 1, 20, 21});
  tape.backward(tape.sum_all(out));
  CHECK(*table->grad == std::vector<double>{1, 1, 0, 0, 2, 2, 0, 0});
  CHECK_THROWS(tape.embedding_gather(table, {4}));
}

TEST_CASE("layer_norm normalizes the last axis") {
  Tape tape;
  auto x = make_tensor({2, 4}, {1, 2, 3, 4, -5, 0, 5, 10});
  auto y = tape.layer_norm(x);
  for (std::size_t r = 0; r < 2; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 4; ++j) mean += y->values[r * 4 + j];
    mean /= 4;
    for (std::size_t j = 0; j < 4; ++j) {
      const double d = y->values[r * 4 + j] - mean;
      var += d * d;
    }
    var /= 4;
    CHECK(std::fabs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));  // 1e-5 epsilon inside
  }
}

TEST_CASE("concat and transpose round trips") {
  Tape tape;
  auto a = make_param({2, 2}, {1, 2, 3, 4});
  auto b = make_param({2, 1}, {9, 8});
  auto cat = tape.concat({a, b}, 1);
  CHECK(cat->shape == std::vector<std::size_t>{2, 3});
  CHECK(cat->values == std::vector<double>{1, 2, 9, 3, 4, 8});
  auto t = tape.transpose(cat);
  CHECK(t->shape == std::vector<std::size_t>{3, 2});
  CHECK(t->values == std::vector<double>{1, 3, 2, 4, 9, 8});
  tape.backward(tape.sum_all(t));
  CHECK(*a->grad == std::vector<double>(4, 1.0));
  CHECK(*b->grad == std::vector<double>(2, 1.0));
}

TEST_CASE("adam") {
  SUBCASE("zero gradients leave parameters untouched") {
    auto p = make_param({3}, {1.0, -2.0, 0.5});
    const std::vector<double> before = p->values;
    AdamState adam({p});
    p->grad_buffer();  // zeros
    adam.step(0.1);
    CHECK(p->values == before);
    CHECK(adam.t() == 1);
  }
  SUBCASE("single hand-evaluated step") {
    // p=1, g=1, lr=0.1: bias-corrected moments are both exactly 1, so the
    // update is lr / (1 + eps)
    auto p = make_param({1}, {1.0});
    AdamState adam({p});
    p->grad_buffer()[0] = 1.0;
    adam.step(0.1);
    CHECK(std::fabs(p->values[0] - 0.9) < 2e-9);   // 0.9 + O(eps)
    CHECK(p->values[0] > 0.9);                     // eps shrinks the step
  }
  SUBCASE("identical params and grads stay identical") {
    auto p1 = make_param({2}, {0.3, -0.7});
    auto p2 = make_param({2}, {0.3, -0.7});
    AdamState adam({p1, p2});
    p1->grad_buffer() = {0.1, -0.2};
    p2->grad_buffer() = {0.1, -0.2};
    for (int i = 0; i < 5; ++i) adam.step(0.05);
    CHECK(p1->values == p2->values);
  }
  SUBCASE("lr must be positive") {
    auto p = make_param({1}, {1.0});
    AdamState adam({p});
    CHECK_THROWS(adam.step(0.0));
  }
}

TEST_CASE("lr schedule") {
  const LrSchedule sched{5e-5, 100};
  SUBCASE("peak at warmup") { CHECK(lr_at(sched, 100) == 5e-5); }
  SUBCASE("exactly halves at 4x warmup") {
    CHECK(lr_at(sched, 400) == lr_at(sched, 100) / 2.0);
  }
  SUBCASE("linear during warmup") {
    CHECK(lr_at(sched, 25) == doctest::Approx(1.25e-5).epsilon(1e-12));
  }
  SUBCASE("step zero is an error") { CHECK_THROWS(lr_at(sched, 0)); }
  SUBCASE("positive, rises to warmup, falls after") {
    double prev = 0.0;
    for (std::uint64_t t = 1; t <= 100; ++t) {
      const double lr = lr_at(sched, t);
      CHECK(lr > 0.0);
      CHECK(lr >= prev);
      prev = lr;
    }
    for (std::uint64_t t = 101; t <= 500; ++t) {
      const double lr = lr_at(sched, t);
      CHECK(lr > 0.0);
      CHECK(lr <= prev);
      prev = lr;
    }
  }
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS(make_tensor({2, 3}, {1.0, 2.0}));  // shape/value mismatch
  auto t = make_tensor({2, 2}, {1, 2, 3, 4});
  CHECK(t->numel() == 4);
  CHECK_THROWS(t->scalar());
  auto s = make_tensor({1}, {7.0});
  CHECK(s->scalar() == 7.0);
}

TEST_CASE("recording off evaluates without closures") {
  Tape tape;
  tape.set_recording(false);
  auto x = make_param({2}, {1.0, 2.0});
  auto y = tape.sum_all(tape.mul(x, x));
  CHECK(y->scalar() == doctest::Approx(5.0));
  CHECK(tape.size() == 0);
}

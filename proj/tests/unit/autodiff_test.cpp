#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <functional>

#include "astg/autodiff.hpp"
#include "astg/checkpoint.hpp"
#include "astg/error.hpp"
#include "astg/rng.hpp"
#include "support.hpp"

using namespace astg;
using namespace astg::ad;

namespace {

Tensor random_param(Rng& rng, std::size_t r, std::size_t c) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::parameter({r, c}, std::move(v));
}

// Builds a scalar from `inputs` and compares reverse-mode gradients against
// central differences for every input entry.
void check_gradients(std::vector<Tensor> inputs, const std::function<Tensor(const std::vector<Tensor>&)>& f,
                     double tol, double floor = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  {
    Tape tape;
    backward(f(inputs));
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto values = inputs[k].mutable_values();
    const auto numeric = fixtures::numeric_gradient(values, [&] { return f(inputs).item(); });
    const auto analytic = inputs[k].grad();
    ASSERT_EQ(analytic.size(), numeric.size());
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      EXPECT_LT(fixtures::relative_error(analytic[i], numeric[i], floor), tol)
          << "input " << k << " entry " << i << ": " << analytic[i] << " vs " << numeric[i];
    }
  }
}

}  // namespace

TEST(Autodiff, SoftmaxOfEqualLogits) {
  const Tensor s = softmax(Tensor::from({1, 2}, {0.0, 0.0}), 1);
  EXPECT_DOUBLE_EQ(s.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s.at(0, 1), 0.5);
}

TEST(Autodiff, SquareDerivative) {
  Tensor x = Tensor::parameter({1, 1}, {3.0});
  Tape tape;
  backward(mul(x, x));
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Autodiff, SumGivesOnes) {
  Rng rng(1);
  Tensor p = random_param(rng, 3, 4);
  Tape tape;
  backward(sum(p));
  for (double g : p.grad()) EXPECT_EQ(g, 1.0);
}

TEST(Autodiff, ConstantsGetNoGradientBuffer) {
  Rng rng(2);
  Tensor p = random_param(rng, 2, 2);
  Tensor c = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tape tape;
  backward(sum(mul(p, c)));
  EXPECT_FALSE(c.has_grad());
  EXPECT_TRUE(p.has_grad());
}

TEST(Autodiff, TwoTermLossAddsGradients) {
  Rng rng(3);
  Tensor p = random_param(rng, 3, 3);
  const Tensor m = Tensor::from({3, 3}, {1, -2, 0.5, 0.1, 0.2, 3, -1, 1, 2});
  auto f = [&] { return sum(tanh(matmul(p, m))); };
  auto g = [&] { return sum(mul(p, p)); };

  std::vector<double> gf, gg, gfg;
  auto grad_of = [&](auto loss) {
    p.zero_grad();
    Tape tape;
    backward(loss());
    return std::vector<double>(p.grad().begin(), p.grad().end());
  };
  gf = grad_of(f);
  gg = grad_of(g);
  gfg = grad_of([&] { return add(f(), g()); });
  for (std::size_t i = 0; i < gfg.size(); ++i) EXPECT_NEAR(gfg[i], gf[i] + gg[i], 1e-12);
}

TEST(Autodiff, RepeatedBackwardAccumulates) {
  Tensor x = Tensor::parameter({1, 1}, {2.0});
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    backward(scalar_mul(x, 3.0));
  }
  EXPECT_DOUBLE_EQ(x.grad()[0], 6.0);
}

TEST(Autodiff, BackwardRejectsBadLosses) {
  Rng rng(4);
  Tensor p = random_param(rng, 2, 2);
  Tape tape;
  EXPECT_THROW(backward(relu(p)), UsageError);
  EXPECT_THROW(backward(Tensor::scalar(1.0)), UsageError);
}

TEST(Autodiff, NoTapeMeansNoRecording) {
  Rng rng(5);
  Tensor p = random_param(rng, 2, 2);
  const Tensor y = sum(p);
  EXPECT_FALSE(y.requires_grad());
}

TEST(Autodiff, DimensionErrorsNameBothShapes) {
  const Tensor a = Tensor::zeros({2, 3});
  const Tensor b = Tensor::zeros({2, 3});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find(shape_string(a.shape())), std::string::npos) << msg;
    EXPECT_NE(msg.find(shape_string(b.shape())), std::string::npos) << msg;
  }
  EXPECT_THROW(add(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), DimensionError);
  EXPECT_THROW(concat({Tensor::zeros({2, 3}), Tensor::zeros({3, 3})}, 1), DimensionError);
  EXPECT_THROW(mul(Tensor::zeros({1, 3}), Tensor::zeros({1, 2})), DimensionError);
}

TEST(Autodiff, SoftmaxRowsAreDistributions) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor x = random_param(rng, 4, 5);
    const Tensor s = softmax(scalar_mul(x, 20.0), 1);
    for (std::size_t r = 0; r < 4; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        EXPECT_GE(s.at(r, c), 0.0);
        total += s.at(r, c);
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
    const Tensor s0 = softmax(x, 0);
    for (std::size_t c = 0; c < 5; ++c) {
      double total = 0.0;
      for (std::size_t r = 0; r < 4; ++r) total += s0.at(r, c);
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Autodiff, LeakyReluLimits) {
  const Tensor x = Tensor::from({1, 4}, {-2.0, -0.5, 0.0, 1.5});
  const Tensor id = leaky_relu(x, 1.0);
  const Tensor r0 = leaky_relu(x, 0.0);
  const Tensor r = relu(x);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(id.values()[i], x.values()[i]);
    EXPECT_EQ(r0.values()[i], r.values()[i]);
  }
}

TEST(Autodiff, MeanOfSoftmaxOfMatmulMatchesFiniteDifferences) {
  // Rows of a softmax always sum to one, so this chain is constant and its
  // true gradient is zero. Central differences then return pure roundoff
  // (~1e-12), which only makes sense against a unit denominator.
  Rng rng(7);
  check_gradients({random_param(rng, 3, 4), random_param(rng, 4, 3)},
                  [](const std::vector<Tensor>& in) {
                    return mean(mean(softmax(matmul(in[0], in[1]), 1), 0), 1);
                  },
                  1e-6, 1.0);
}

TEST(Autodiff, WeightedSoftmaxOfMatmulMatchesFiniteDifferences) {
  Rng rng(17);
  const Tensor w = Tensor::from({3, 3}, {0.9, -0.4, 1.7, -1.1, 0.2, 0.6, 1.3, -0.8, 0.05});
  check_gradients({random_param(rng, 3, 4), random_param(rng, 4, 3)},
                  [&](const std::vector<Tensor>& in) {
                    return mean(mean(mul(softmax(matmul(in[0], in[1]), 1), w), 0), 1);
                  },
                  1e-6);
}

TEST(Autodiff, EveryOpMatchesFiniteDifferences) {
  Rng rng(8);
  const Tensor w = Tensor::from({1, 3}, {0.3, -1.2, 2.0});
  using F = std::function<Tensor(const std::vector<Tensor>&)>;
  const std::vector<std::pair<const char*, F>> cases = {
      {"add", [&](const auto& in) { return sum(tanh(add(in[0], in[1]))); }},
      {"bias", [&](const auto& in) { return sum(tanh(add(in[0], slice(in[1], 0, 0, 1)))); }},
      {"sub", [&](const auto& in) { return sum(mul(sub(in[0], in[1]), sub(in[0], in[1]))); }},
      {"transpose", [&](const auto& in) { return sum(tanh(matmul(transpose(in[0]), in[1]))); }},
      {"concat0", [&](const auto& in) { return sum(tanh(concat({in[0], in[1]}, 0))); }},
      {"concat1", [&](const auto& in) { return sum(mul(concat({in[0], in[1]}, 1), concat({in[1], in[0]}, 1))); }},
      {"slice1", [&](const auto& in) { return sum(tanh(slice(in[0], 1, 1, 3))); }},
      {"mean0", [&](const auto& in) { return sum(mul(mean(in[0], 0), w)); }},
      {"leaky", [&](const auto& in) { return sum(mul(leaky_relu(in[0], 0.2), in[1])); }},
      {"relu", [&](const auto& in) { return sum(mul(relu(in[0]), in[1])); }},
      {"softmax0", [&](const auto& in) { return sum(mul(softmax(in[0], 0), in[1])); }},
      {"scalar_mul", [&](const auto& in) { return sum(tanh(scalar_mul(in[0], -1.7))); }},
  };
  for (const auto& [name, f] : cases) {
    SCOPED_TRACE(name);
    check_gradients({random_param(rng, 2, 3), random_param(rng, 2, 3)}, f, 1e-6);
  }
}

TEST(Autodiff, TapeIsThreadLocalAndNested) {
  EXPECT_EQ(Tape::active(), nullptr);
  {
    Tape outer;
    EXPECT_EQ(Tape::active(), &outer);
    {
      Tape inner;
      EXPECT_EQ(Tape::active(), &inner);
    }
    EXPECT_EQ(Tape::active(), &outer);
  }
  EXPECT_EQ(Tape::active(), nullptr);
}

TEST(Checkpoint, RoundTripsExactly) {
  Rng rng(9);
  Checkpoint cp;
  cp.meta["kind"] = "test";
  cp.tensors.push_back({"a", random_param(rng, 3, 5)});
  cp.tensors.push_back({"b", Tensor::from({1, 1}, {1.0 / 3.0})});
  const auto path = std::filesystem::temp_directory_path() / "astg_ckpt_roundtrip.txt";
  save_checkpoint(path, cp);
  const Checkpoint back = load_checkpoint(path);
  EXPECT_EQ(back.meta.at("kind"), "test");
  ASSERT_EQ(back.tensors.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(back.tensors[k].name, cp.tensors[k].name);
    EXPECT_EQ(back.tensors[k].tensor.shape(), cp.tensors[k].tensor.shape());
    for (std::size_t i = 0; i < cp.tensors[k].tensor.size(); ++i) {
      EXPECT_EQ(back.tensors[k].tensor.values()[i], cp.tensors[k].tensor.values()[i]);
    }
  }
  ASSERT_NE(back.find("b"), nullptr);
  EXPECT_EQ(back.find("zzz"), nullptr);
  std::filesystem::remove(path);
}

TEST(Checkpoint, MalformedFilesFailToLoad) {
  const auto path = std::filesystem::temp_directory_path() / "astg_ckpt_bad.txt";
  {
    std::ofstream out(path);
    out << "not a checkpoint\n";
  }
  EXPECT_THROW(load_checkpoint(path), LoadError);
  EXPECT_THROW(load_checkpoint(path.string() + ".missing"), LoadError);
  std::filesystem::remove(path);
}

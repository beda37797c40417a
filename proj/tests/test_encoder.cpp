// Copyright 2026 The PTSL Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "ptsl/encoder.hpp"
#include "ptsl/errors.hpp"

namespace ptsl {
namespace {

ad::Tensor random_input(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = n(rng);
  return ad::Tensor::from_values({rows, cols}, v);
}

EncoderConfig care(std::size_t experts = 3) {
  EncoderConfig c;
  c.kind = EncoderKind::CareMixture;
  c.num_experts = experts;
  c.expert_hidden = 6;
  c.context_dim = 5;
  c.attention_hidden = 7;
  c.output_dim = 4;
  return c;
}

TEST(EncoderConfig, MixtureNeedsTwoExperts) {
  EXPECT_THROW(care(1).validate(), ConfigError);
  EXPECT_NO_THROW(care(1).validate(true));
  EXPECT_THROW(TaskEncoder(care(1), 3, 2, 0), ConfigError);
}

TEST(Encode, IdentityReturnsState) {
  const TaskEncoder enc(EncoderConfig{}, 5, 3, 1);
  const ad::Tensor x = random_input(4, 5, 2);
  for (int j = 0; j < 3; ++j) {
    ad::Tape tape(false);
    const ad::Tensor y = enc.encode(tape, x, j);
    EXPECT_TRUE(std::equal(y.values().begin(), y.values().end(), x.values().begin()));
  }
  EXPECT_EQ(TaskEncoder::count(EncoderConfig{}, 5, 3), 0u);
}

TEST(Encode, SingleExpertEqualsItsMlp) {
  const TaskEncoder enc(care(1), 3, 2, 4, true);
  const ad::Tensor x = random_input(5, 3, 5);
  ad::Tape tape(false);
  const ad::Tensor y = enc.encode(tape, x, 1);
  const ad::Tensor e = enc.experts().front().forward(tape, x);
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_DOUBLE_EQ(y.values()[k], e.values()[k]);
}

TEST(Encode, MatchesHandComputedMixture) {
  const EncoderConfig c = care(3);
  const TaskEncoder enc(c, 3, 4, 6);
  for (int j = 0; j < 4; ++j) {
    const ad::Tensor x = random_input(1, 3, 10 + j);
    ad::Tape tape(false);
    const ad::Tensor y = enc.encode(tape, x, j);
    const auto ref = oracle::mixture_forward(c, enc.parameters(""), 4, {x.values().begin(), x.values().end()}, j);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(y.values()[k], ref[k], 1e-12);
  }
}

TEST(Encode, TaskOutOfRange) {
  const TaskEncoder enc(care(), 3, 2, 1);
  ad::Tape tape(false);
  EXPECT_THROW((void)enc.encode(tape, random_input(1, 3, 1), 2), TaskError);
  EXPECT_THROW((void)enc.encode(tape, random_input(1, 4, 1), 0), DimensionError);
}

TEST(Attention, WeightsFormSimplex) {
  const TaskEncoder enc(care(4), 3, 5, 2);
  ad::Tape tape(false);
  const ad::Tensor w = enc.attention_weights(tape);
  ASSERT_EQ(w.shape(), (ad::Shape{5, 4}));
  for (std::size_t t = 0; t < 5; ++t) {
    double s = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
      EXPECT_GE(w.at(t, a), 0.0);
      s += w.at(t, a);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    const auto ref = oracle::mixture_weights(enc.parameters(""), static_cast<int>(t));
    for (std::size_t a = 0; a < 4; ++a) EXPECT_NEAR(w.at(t, a), ref[a], 1e-12);
  }
}

TEST(Attention, ContextGradientsFlowOnlyThroughAttention) {
  const TaskEncoder enc(care(3), 3, 3, 3);
  oracle::randomize(enc.parameters(), 4);
  const ad::Tensor x = random_input(5, 3, 5);
  const std::vector<int> ids{0, 2, 2, 1, 0};
  const auto loss = [&](ad::Tape& t) { return ad::mean(t, ad::square(t, enc.encode(t, x, ids))); };
  const auto r = oracle::finite_difference(loss, {{"contexts", enc.contexts()}});
  EXPECT_LT(r.max_rel_error, 1e-4);
  // With the attention output weights zeroed the mixture no longer depends on
  // the context, so the contexts receive no gradient at all.
  for (const auto& p : enc.attention().parameters("a")) {
    if (p.name == "a.1.weight") {
      ad::Tensor w = p.tensor;
      std::fill(w.mutable_values().begin(), w.mutable_values().end(), 0.0);
    }
  }
  ad::Tensor ctx = enc.contexts();
  ctx.zero_grad();
  ad::Tape tape;
  tape.backward(loss(tape));
  for (double g : enc.contexts().grad()) EXPECT_EQ(g, 0.0);
}

TEST(Attention, IdenticalContextsGiveIdenticalEncodings) {
  const TaskEncoder enc(care(3), 3, 3, 8);
  ad::Tensor ctx = enc.contexts();
  for (std::size_t c = 0; c < ctx.cols(); ++c) ctx.at(2, c) = ctx.at(0, c);
  const ad::Tensor x = random_input(4, 3, 9);
  ad::Tape tape(false);
  const ad::Tensor a = enc.encode(tape, x, 0);
  const ad::Tensor b = enc.encode(tape, x, 2);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST(Encode, MlpKindAndCounts) {
  EncoderConfig c;
  c.kind = EncoderKind::Mlp;
  c.expert_hidden = 6;
  c.output_dim = 4;
  const TaskEncoder enc(c, 3, 2, 1);
  EXPECT_EQ(count_scalars(enc.parameters()), TaskEncoder::count(c, 3, 2));
  const TaskEncoder mix(care(3), 3, 4, 1);
  EXPECT_EQ(count_scalars(mix.parameters()), TaskEncoder::count(care(3), 3, 4));
  EXPECT_EQ(mix.output_dim(), 4u);
}

TEST(Gradients, MixtureFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TaskEncoder enc(care(3), 3, 3, seed);
    oracle::randomize(enc.parameters(), seed + 20);
    const ad::Tensor x = random_input(6, 3, seed + 30);
    const std::vector<int> ids{0, 1, 2, 0, 1, 2};
    const auto r = oracle::finite_difference(
        [&](ad::Tape& t) { return ad::mean(t, ad::square(t, enc.encode(t, x, ids))); }, enc.parameters());
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst;
  }
}

}  // namespace
}  // namespace ptsl

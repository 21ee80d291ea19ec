#include "spe/estimate.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spe;

namespace {

const Prob4 kTruth{0.4, 0.3, 0.2, 0.1};

TransitionCounts simulated_counts(std::size_t n, std::uint64_t seed, double pa = 0.01, double eps = 0.02) {
  return count_transitions(simulate(transition_matrix(kTruth, pa, eps), n, seed));
}

// Direct sum over the sequence, without the transition-count shortcut
double loglik_oracle(const OutcomeSequence& seq, const Prob4& p, double pa, double eps) {
  const auto m = transition_matrix(p, pa, eps);
  double ll = std::log(p[seq[0]]);
  for (std::size_t k = 1; k < seq.size(); ++k) ll += std::log(m.P(seq[k - 1], seq[k]));
  return ll;
}

}  // namespace

TEST(Counts, Examples) {
  const OutcomeSequence a{0, 0, 0};
  const auto ca = count_transitions(a);
  EXPECT_EQ(ca.n[0][0], 2u);
  EXPECT_EQ(ca.transitions(), 2u);
  EXPECT_EQ(ca.first_symbol, 0);
  const OutcomeSequence b{0, 1, 2, 3};
  const auto cb = count_transitions(b);
  EXPECT_EQ(cb.n[0][1], 1u);
  EXPECT_EQ(cb.n[1][2], 1u);
  EXPECT_EQ(cb.n[2][3], 1u);
  EXPECT_EQ(cb.transitions(), 3u);
  const auto cs = simulated_counts(12345, 1);
  EXPECT_EQ(cs.transitions(), 12344u);
  EXPECT_EQ(cs.n_total, 12345u);
}

TEST(Counts, RejectsBadSymbols) {
  const OutcomeSequence bad{0, 4, 1};
  EXPECT_THROW(count_transitions(bad), input_error);
  EXPECT_THROW(count_transitions(OutcomeSequence{}), input_error);
}

TEST(LogLikelihood, MatchesSequenceSum) {
  const auto seq = simulate(transition_matrix(kTruth, 0.01, 0.02), 5000, 3);
  const auto counts = count_transitions(seq);
  for (const Prob4& p : {kTruth, Prob4{0.25, 0.25, 0.25, 0.25}, Prob4{0.1, 0.2, 0.3, 0.4}})
    EXPECT_NEAR(log_likelihood(counts, p, 0.01, 0.02), loglik_oracle(seq, p, 0.01, 0.02), 1e-8);
}

TEST(LogLikelihood, ImpossibleTransitionIsNegativeInfinity) {
  const auto counts = count_transitions(OutcomeSequence{0, 1, 0, 1});
  EXPECT_EQ(log_likelihood(counts, {1.0, 0.0, 0.0, 0.0}, 0.0, 0.0), -std::numeric_limits<double>::infinity());
}

TEST(Mle, IidCollapseGivesFrequencies) {
  std::mt19937_64 rng(4);
  std::discrete_distribution<int> d({0.5, 0.2, 0.2, 0.1});
  OutcomeSequence seq(20000);
  for (auto& s : seq) s = static_cast<std::uint8_t>(d(rng));
  const auto counts = count_transitions(seq);
  const auto r = mle(counts, 0.0, 0.0);
  ASSERT_TRUE(r.converged);
  const auto sym = counts.symbol_counts();
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.p_hat[i], sym[i] / 20000.0, 1e-8);
}

TEST(Mle, ResultInvariants) {
  const auto r = mle(simulated_counts(100000, 5), 0.01, 0.02);
  ASSERT_TRUE(r.converged);
  EXPECT_LT(r.gradient_norm, 1e-8);
  double s = 0.0;
  for (int i = 0; i < 4; ++i) {
    s += r.p_hat[i];
    EXPECT_LE(r.ci_lower[i], r.p_hat[i]);
    EXPECT_LE(r.p_hat[i], r.ci_upper[i]);
  }
  EXPECT_NEAR(s, 1.0, 1e-10);
  EXPECT_GE(r.loglik, r.naive_loglik);
}

TEST(Mle, LocalOptimality) {
  const auto counts = simulated_counts(100000, 6);
  const auto r = mle(counts, 0.01, 0.02);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      for (double h : {1e-3, -1e-3}) {
        Prob4 q = r.p_hat;
        q[i] += h;
        q[j] -= h;
        EXPECT_LT(log_likelihood(counts, q, 0.01, 0.02), r.loglik);
      }
    }
}

TEST(Mle, CoverageAt99Percent) {
  std::array<int, 4> covered{};
  for (std::uint64_t t = 0; t < 100; ++t) {
    const auto r = mle(simulated_counts(100000, 1000 + t), 0.01, 0.02, 0.99);
    for (int i = 0; i < 4; ++i) covered[i] += r.ci_lower[i] <= kTruth[i] && kTruth[i] <= r.ci_upper[i];
  }
  for (int c : covered) EXPECT_GE(c, 95);
}

TEST(Mle, NeverWorseThanInitializer) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = mle(simulated_counts(2000, seed, 0.04, 0.05), 0.04, 0.05);
    EXPECT_GE(r.loglik, r.naive_loglik);
  }
}

TEST(Mle, DarkCountsAreUndone) {
  const Calibration cal{0.01, 0.02, 0.1};
  const auto model = transition_matrix(dcr_correct(kTruth, cal.p_dcr), cal.p_a, cal.epsilon);
  const auto r = mle(count_transitions(simulate(model, 400000, 7)), cal, 0.9999);
  for (int i = 0; i < 4; ++i) {
    EXPECT_LE(r.ci_lower[i], kTruth[i]);
    EXPECT_GE(r.ci_upper[i], kTruth[i]);
  }
}

TEST(Mle, RejectsBadLevel) {
  const auto counts = simulated_counts(1000, 8);
  EXPECT_THROW(mle(counts, 0.01, 0.02, 1.0), input_error);
  EXPECT_THROW(mle(counts, 0.01, 0.02, 0.0), input_error);
}

TEST(Naive, InvertsStationaryFrequencies) {
  const auto counts = simulated_counts(400000, 9);
  const Prob4 n = naive_frequency_estimate(counts, {0.01, 0.02, 0.0});
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(n[i], kTruth[i], 0.005);
  for (double v : naive_frequency_estimate(count_transitions(OutcomeSequence{0, 0, 0}))) EXPECT_GE(v, 1e-7);
}

#include "consensus_fdi/dynamics.h"

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "consensus_fdi/errors.h"
#include "test_graphs.h"

namespace consensus_fdi {
namespace {

SystemModel GridModel(double eps = 0.02) {
  return SystemModel(Graph::Build(9, testing::GridEdges()), eps);
}

GTEST_TEST(SystemModelTest, ReducedMatrix) {
  const SystemModel model = GridModel();
  const Eigen::MatrixXd expected =
      Eigen::MatrixXd::Identity(9, 9) - 0.02 * Laplacian(model.graph());
  EXPECT_TRUE(model.a_reduced().isApprox(expected, 1e-15));
  EXPECT_TRUE(model.stochastic());
  EXPECT_FALSE(model.step_too_large());
  EXPECT_EQ(model.kind(), ModelKind::kConsensus);
  EXPECT_EQ(model.phi().cwiseAbs().maxCoeff(), 0.0);
}

GTEST_TEST(SystemModelTest, RejectsBadStep) {
  const Graph g = Graph::Build(9, testing::GridEdges());
  EXPECT_THROW(SystemModel(g, 0.0), ValidationError);
  EXPECT_THROW(SystemModel(g, -0.1), ValidationError);
  EXPECT_THROW(SystemModel(g, 0.1, FormationSpec{Positions::Zero(3, 2)}), ValidationError);
}

// Row sums stay at one and entries non-negative up to eps = 1/max degree;
// beyond it the flag fires.
GTEST_TEST(SystemModelTest, StochasticUpToDegreeBound) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = testing::RandomConnectedGraph(2 + trial % 11, 0.3, gen);
    const double bound = 1.0 / g.max_degree();
    std::uniform_real_distribution<double> frac(0.01, 1.0);
    const SystemModel ok(g, bound * frac(gen));
    EXPECT_TRUE(ok.stochastic());
    EXPECT_FALSE(ok.step_too_large());
    EXPECT_LT((ok.a_reduced().rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-14);
    EXPECT_GE(ok.a_reduced().minCoeff(), -1e-15);
    const SystemModel edge(g, bound);
    EXPECT_TRUE(edge.stochastic());
    const SystemModel big(g, bound * 1.05);
    EXPECT_TRUE(big.step_too_large());
    EXPECT_FALSE(big.stochastic());
  }
}

GTEST_TEST(StepTest, MatchesLiftedUpdate) {
  std::mt19937_64 gen(4);
  const SystemModel model = GridModel();
  const Eigen::MatrixXd lifted = testing::Lift(model.a_reduced());
  const Positions x = testing::RandomPositions(9, gen);
  const FaultEvent fault{6, Eigen::Vector2d(2.0, 1.0), 0};
  const LeaderInput input{4, Eigen::Vector2d(-0.3, 0.7)};
  const StateVector next = Step(model, {x, 3}, fault, input);
  Eigen::VectorXd expected = lifted * testing::Stack(x);
  expected.segment<2>(12) += 0.02 * fault.delta;
  expected.segment<2>(8) += input.u;
  EXPECT_LT((testing::Stack(next.x) - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(next.k, 4);
}

GTEST_TEST(StepTest, FaultActsFromOnset) {
  const SystemModel model = GridModel();
  const Positions x = Positions::Zero(9, 2);
  const FaultEvent fault{2, Eigen::Vector2d(1.0, -1.0), 5};
  EXPECT_EQ(Step(model, {x, 4}, fault).x.cwiseAbs().maxCoeff(), 0.0);
  const Positions after = Step(model, {x, 5}, fault).x;
  EXPECT_DOUBLE_EQ(after(2, 0), 0.02);
  EXPECT_DOUBLE_EQ(after(2, 1), -0.02);
}

// Consensus keeps the centroid; a constant fault moves it by eps * delta / n
// each step.
GTEST_TEST(StepTest, CentroidDrift) {
  std::mt19937_64 gen(8);
  const SystemModel model = GridModel();
  const FaultEvent fault{6, Eigen::Vector2d(2.0, 1.0), 10};
  StateVector s{testing::RandomPositions(9, gen), 0};
  const Eigen::Vector2d c0 = Centroid(s.x);
  for (int k = 0; k < 60; ++k) {
    s = Step(model, s, fault);
    const int exposed = std::max(0, s.k - fault.onset);
    const Eigen::Vector2d expected = c0 + exposed * 0.02 * fault.delta / 9.0;
    EXPECT_LT((Centroid(s.x) - expected).norm(), 1e-14) << "k = " << s.k;
  }
}

GTEST_TEST(StepTest, ConsensusConvergesToInitialCentroid) {
  std::mt19937_64 gen(6);
  const SystemModel model = GridModel(0.02);
  StateVector s{testing::RandomPositions(9, gen), 0};
  const Eigen::RowVector2d c0 = Centroid(s.x).transpose();
  for (int k = 0; k < 2000; ++k) s = Step(model, s);
  EXPECT_LT((s.x.rowwise() - c0).rowwise().norm().maxCoeff(), 1e-6);
}

GTEST_TEST(StepTest, CentroidInvariance) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = testing::RandomConnectedGraph(2 + trial % 12, 0.2, gen);
    const SystemModel model(g, 0.7 / g.max_degree());
    const int n = g.size();
    const Eigen::RowVectorXd m = Eigen::RowVectorXd::Constant(n, 1.0 / n);
    EXPECT_LT((m * model.a_reduced() - m).cwiseAbs().maxCoeff(), 1e-14);
  }
}

GTEST_TEST(StepTest, LiftedEvolutionMatches) {
  std::mt19937_64 gen(10);
  const SystemModel model = GridModel(0.1);
  const Eigen::MatrixXd lifted = testing::Lift(model.a_reduced());
  StateVector s{testing::RandomPositions(9, gen), 0};
  Eigen::VectorXd full = testing::Stack(s.x);
  for (int k = 0; k < 500; ++k) {
    s = Step(model, s);
    full = lifted * full;
    ASSERT_LT((testing::Stack(s.x) - full).cwiseAbs().maxCoeff(), 1e-13) << "k = " << k;
  }
}

GTEST_TEST(MeasurementTest, RelativePositions) {
  std::mt19937_64 gen(2);
  const SystemModel model = GridModel();
  const Positions x = testing::RandomPositions(9, gen);
  const Positions y = Measurement(model, x, 4);
  const Eigen::MatrixXd c = MeasurementMatrix(model.graph(), 4);
  ASSERT_EQ(c.rows(), 4);
  const std::vector<int>& nb = model.graph().neighbors(4);
  for (int r = 0; r < 4; ++r) {
    EXPECT_EQ(c(r, 4), 1.0);
    EXPECT_EQ(c(r, nb[r]), -1.0);
    EXPECT_EQ(c.row(r).sum(), 0.0);
    EXPECT_LT((y.row(r) - (x.row(4) - x.row(nb[r]))).norm(), 1e-15);
  }
}

// A faulty agent that reads every relative measurement with a bias b_j moves
// exactly like the nominal agent plus a state fault delta = -sum_j b_j.
GTEST_TEST(MeasurementTest, BiasEquivalentToStateFault) {
  std::mt19937_64 gen(13);
  const double eps = 0.02;
  const SystemModel model = GridModel(eps);
  const int f = 6;
  const std::vector<int>& nb = model.graph().neighbors(f);
  std::vector<Eigen::Vector2d> biases;
  for (std::size_t j = 0; j < nb.size(); ++j) biases.push_back(Eigen::Vector2d::Random());
  const FaultEvent fault{f, FaultyMeasurementBias(biases), 0};

  Positions biased = testing::RandomPositions(9, gen);
  StateVector nominal{biased, 0};
  for (int k = 0; k < 40; ++k) {
    Positions next = biased;
    for (int i = 0; i < 9; ++i) {
      Eigen::RowVector2d sum = Eigen::RowVector2d::Zero();
      const std::vector<int>& ni = model.graph().neighbors(i);
      for (std::size_t j = 0; j < ni.size(); ++j) {
        Eigen::RowVector2d y = biased.row(i) - biased.row(ni[j]);
        if (i == f) y += biases[j].transpose();
        sum += y;
      }
      next.row(i) = biased.row(i) - eps * sum;
    }
    biased = next;
    nominal = Step(model, nominal, fault);
    EXPECT_LT((nominal.x - biased).cwiseAbs().maxCoeff(), 1e-13) << "k = " << k;
  }
}

GTEST_TEST(FormationTest, TargetsAreFixedPoint) {
  Positions targets(9, 2);
  for (int i = 0; i < 9; ++i) targets.row(i) << i % 3, i / 3 + 0.5 * (i % 2);
  const SystemModel model(Graph::Build(9, testing::GridEdges()), 0.05,
                          FormationSpec{targets});
  EXPECT_EQ(model.kind(), ModelKind::kFormation);
  const Positions lap_t = Laplacian(model.graph()) * targets;
  EXPECT_LT((model.phi() - lap_t).cwiseAbs().maxCoeff(), 1e-14);
  Positions shifted = targets;
  shifted.rowwise() += Eigen::RowVector2d(3.0, -1.0);
  const StateVector next = Step(model, {shifted, 0});
  EXPECT_LT((next.x - shifted).cwiseAbs().maxCoeff(), 1e-14);
}

GTEST_TEST(FormationTest, ConvergesToShiftedTargets) {
  std::mt19937_64 gen(17);
  Positions targets = testing::RandomPositions(9, gen, 2.0);
  const SystemModel model(Graph::Build(9, testing::GridEdges()), 0.2,
                          FormationSpec{targets});
  StateVector s{testing::RandomPositions(9, gen), 0};
  const Eigen::Vector2d c0 = Centroid(s.x);
  for (int k = 0; k < 2000; ++k) s = Step(model, s);
  Positions expected = targets;
  expected.rowwise() += (c0 - Centroid(targets)).transpose();
  EXPECT_LT((s.x - expected).cwiseAbs().maxCoeff(), 1e-9);
}

GTEST_TEST(FormationTest, ReachesEquilibriumFromRandomStart) {
  std::mt19937_64 gen(19);
  const Positions targets = testing::RandomPositions(9, gen, 2.0);
  const SystemModel model(Graph::Build(9, testing::GridEdges()), 0.02,
                          FormationSpec{targets});
  const Eigen::MatrixXd lap = Laplacian(model.graph());
  StateVector s{testing::RandomPositions(9, gen), 0};
  for (int k = 0; k < 2000; ++k) s = Step(model, s);
  EXPECT_LT((lap * s.x - model.phi()).norm(), 1e-6);
}

GTEST_TEST(IsRowStochasticTest, Cases) {
  EXPECT_TRUE(IsRowStochastic(Eigen::MatrixXd::Identity(3, 3)));
  Eigen::Matrix2d neg;
  neg << 1.5, -0.5, 0.5, 0.5;
  EXPECT_FALSE(IsRowStochastic(neg));
  Eigen::Matrix2d sum;
  sum << 0.5, 0.4, 0.5, 0.5;
  EXPECT_FALSE(IsRowStochastic(sum));
}

}  // namespace
}  // namespace consensus_fdi

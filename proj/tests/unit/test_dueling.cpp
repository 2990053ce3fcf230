#include "duel/aggregate.hpp"
#include "duel/dueling.hpp"
#include "duel/error.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace duel;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

}  // namespace

TEST(Builders, SingleStreamShapesAndParameterCount) {
    const DenseNet net = build_single_stream(70, 5, 1);
    ASSERT_EQ(net.shared.size(), 3u);
    EXPECT_EQ(net.shared[0].weight.rows(), 50);
    EXPECT_EQ(net.shared[0].weight.cols(), 70);
    EXPECT_EQ(net.shared[1].weight.rows(), 50);
    EXPECT_EQ(net.shared[1].weight.cols(), 50);
    EXPECT_EQ(net.shared[2].weight.rows(), 5);
    EXPECT_EQ(net.shared[2].weight.cols(), 50);
    EXPECT_EQ(net.parameter_count(), 70u * 50 + 50 + 50 * 50 + 50 + 50 * 5 + 5);
    EXPECT_EQ(net.parameter_count(), 6355u);
    EXPECT_EQ(build_single_stream(70, 20, 1).shared[2].weight.rows(), 20);
}

TEST(Builders, DuelingShapesAndParameterCount) {
    const DenseNet net = build_dueling(70, 5, 1);
    EXPECT_EQ(net.topology, Topology::Dueling);
    ASSERT_EQ(net.shared.size(), 1u);
    ASSERT_EQ(net.value.size(), 2u);
    ASSERT_EQ(net.advantage.size(), 2u);
    EXPECT_EQ(net.shared[0].weight.rows(), 50);
    EXPECT_EQ(net.shared[0].weight.cols(), 70);
    EXPECT_EQ(net.value[0].weight.rows(), 25);
    EXPECT_EQ(net.value[0].weight.cols(), 50);
    EXPECT_EQ(net.value[1].weight.rows(), 1);
    EXPECT_EQ(net.value[1].weight.cols(), 25);
    EXPECT_EQ(net.advantage[0].weight.rows(), 25);
    EXPECT_EQ(net.advantage[1].weight.rows(), 5);
    EXPECT_EQ(net.advantage[1].weight.cols(), 25);
    EXPECT_EQ(net.value[0].activation, Activation::Rectifier);
    EXPECT_EQ(net.value[1].activation, Activation::Identity);
    EXPECT_EQ(net.advantage[1].activation, Activation::Identity);
    // 70*50+50 + (50*25+25 + 25*1+1) + (50*25+25 + 25*5+5)
    EXPECT_EQ(net.parameter_count(), 3550u + 1301u + 1405u);

    const auto out = dueling_outputs(net, Eigen::VectorXd::Zero(70));
    EXPECT_EQ(out.adv.size(), 5);
    EXPECT_EQ(out.q.size(), 5);
}

TEST(Builders, ParameterParityWithinQuarter) {
    for (std::size_t n : {5u, 10u, 20u}) {
        const double single = static_cast<double>(build_single_stream(70, n, 1).parameter_count());
        const double duel = static_cast<double>(build_dueling(70, n, 1).parameter_count());
        EXPECT_LT(std::abs(single - duel) / std::max(single, duel), 0.25) << n << " actions";
    }
}

TEST(Builders, RejectInvalidDims) {
    EXPECT_THROW(build_single_stream(0, 5, 1), InvalidSpec);
    EXPECT_THROW(build_dueling(70, 0, 1), InvalidSpec);
}

TEST(Aggregate, MeanExamples) {
    const auto q = aggregate(AggregatorKind::Mean, 0.0, vec({1, 2, 3}));
    EXPECT_EQ(q, vec({-1, 0, 1}));
    for (double c : {-7.5, 0.0, 3.25, 1e6})
        EXPECT_EQ(aggregate(AggregatorKind::Mean, 5.0, vec({c, c, c})), vec({5, 5, 5}));
}

TEST(Aggregate, MaxExample) {
    const auto q = aggregate(AggregatorKind::Max, 2.0, vec({0, -1}));
    EXPECT_EQ(q, vec({2, 1}));
}

TEST(Aggregate, EmptyAdvantageRejected) {
    EXPECT_THROW(aggregate(AggregatorKind::Mean, 0.0, Eigen::VectorXd()), DomainError);
    EXPECT_THROW(parse_aggregator("median"), InvalidSpec);
    EXPECT_EQ(parse_aggregator("max"), AggregatorKind::Max);
}

TEST(Aggregate, InvariantsOnRandomInputs) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 1 + trial % 20;
        const Eigen::VectorXd adv = oracle::random_vector(n, rng, 5.0);
        const double v = u(rng);
        const double c = u(rng);
        const Eigen::VectorXd shifted = adv.array() + c;

        const auto qm = aggregate(AggregatorKind::Mean, v, adv);
        EXPECT_LE((aggregate(AggregatorKind::Mean, v, shifted) - qm).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(qm.mean(), v, 1e-12);
        EXPECT_EQ(argmax_lowest(qm), argmax_lowest(adv));

        const auto qx = aggregate(AggregatorKind::Max, v, adv);
        EXPECT_LE((aggregate(AggregatorKind::Max, v, shifted) - qx).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(qx(argmax_lowest(adv)), v);

        const auto qn = aggregate(AggregatorKind::Naive, v, adv);
        if (c != 0.0) EXPECT_GT((aggregate(AggregatorKind::Naive, v, shifted) - qn).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Aggregate, ArgmaxTiesGoToLowestIndex) {
    EXPECT_EQ(argmax_lowest(vec({1, 3, 3, 2})), 1);
    EXPECT_EQ(argmax_lowest(vec({0, 0, 0})), 0);
}

TEST(AggregateBackward, MeanExample) {
    const auto g = aggregate_backward(AggregatorKind::Mean, vec({0.3, -2, 7}), vec({1, 0, 0}));
    EXPECT_DOUBLE_EQ(g.d_value, 1.0);
    EXPECT_NEAR(g.d_advantage(0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(g.d_advantage(1), -1.0 / 3.0, 1e-15);
    EXPECT_NEAR(g.d_advantage(2), -1.0 / 3.0, 1e-15);
}

TEST(AggregateBackward, ZeroInZeroOut) {
    for (auto kind : {AggregatorKind::Mean, AggregatorKind::Max, AggregatorKind::Naive}) {
        const auto g = aggregate_backward(kind, vec({1, 2, 3}), Eigen::VectorXd::Zero(3));
        EXPECT_EQ(g.d_value, 0.0);
        EXPECT_TRUE((g.d_advantage.array() == 0.0).all());
    }
}

TEST(AggregateBackward, MatchesFiniteDifferencesAndProjectsOutConstant) {
    std::mt19937_64 rng(5);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + trial % 7;
        const Eigen::VectorXd adv = oracle::random_vector(n, rng, 3.0);
        const Eigen::VectorXd w = oracle::random_vector(n, rng);  // L = w . q
        const double v = 0.4;
        for (auto kind : {AggregatorKind::Mean, AggregatorKind::Max, AggregatorKind::Naive}) {
            const auto g = aggregate_backward(kind, adv, w);
            const double dv = (w.dot(aggregate(kind, v + h, adv)) - w.dot(aggregate(kind, v - h, adv))) / (2 * h);
            EXPECT_NEAR(g.d_value, dv, 1e-8);
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::VectorXd up = adv, dn = adv;
                up(i) += h;
                dn(i) -= h;
                const double fd = (w.dot(aggregate(kind, v, up)) - w.dot(aggregate(kind, v, dn))) / (2 * h);
                EXPECT_NEAR(g.d_advantage(i), fd, 1e-7);
            }
            if (kind == AggregatorKind::Mean) {
                EXPECT_NEAR(g.d_advantage.sum(), 0.0, 1e-14);
            }
        }
    }
}

TEST(AggregateBackward, MaxSubgradientGoesToLowestArgmax) {
    const auto g = aggregate_backward(AggregatorKind::Max, vec({2, 5, 5}), vec({1, 1, 1}));
    EXPECT_DOUBLE_EQ(g.d_value, 3.0);
    EXPECT_DOUBLE_EQ(g.d_advantage(0), 1.0);
    EXPECT_DOUBLE_EQ(g.d_advantage(1), 1.0 - 3.0);
    EXPECT_DOUBLE_EQ(g.d_advantage(2), 1.0);
}

TEST(JunctionRescale, Examples) {
    const auto r = junction_rescale(vec({2, -2}));
    EXPECT_NEAR(r(0), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r(1), -std::sqrt(2.0), 1e-15);
    EXPECT_TRUE((junction_rescale(Eigen::VectorXd::Zero(4)).array() == 0.0).all());
    const auto twice = junction_rescale(junction_rescale(vec({2, -2})));
    EXPECT_NEAR(twice(0), 1.0, 1e-15);
    EXPECT_GT(std::abs(twice(0) - r(0)), 0.1);
}

TEST(JunctionRescale, AppliedExactlyOncePerDuelingPass) {
    std::mt19937_64 rng(4);
    const DenseNet duel = build_dueling(9, 4, 3);
    const DenseNet single = build_single_stream(9, 4, 3);
    const Eigen::VectorXd x = oracle::random_vector(9, rng);
    const Eigen::VectorXd d = oracle::random_vector(4, rng);
    const auto fd = forward(duel, x);
    const auto exact = backward(duel, fd.trace, d, JunctionGrad::Exact);
    const auto scaled = backward(duel, fd.trace, d, JunctionGrad::Rescaled);
    EXPECT_EQ(exact.junction_rescales, 0);
    EXPECT_EQ(scaled.junction_rescales, 1);
    const double k = 1.0 / std::sqrt(2.0);
    EXPECT_LT((scaled.params.shared[0].weight - k * exact.params.shared[0].weight).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((scaled.params.shared[0].bias - k * exact.params.shared[0].bias).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((scaled.input_grad - k * exact.input_grad).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE(scaled.params.value[0].weight == exact.params.value[0].weight);
    EXPECT_TRUE(scaled.params.advantage[1].weight == exact.params.advantage[1].weight);

    const auto fs = forward(single, x);
    EXPECT_EQ(backward(single, fs.trace, d, JunctionGrad::Rescaled).junction_rescales, 0);
}

TEST(JunctionRescale, RescaledTrunkMatchesScaledFiniteDifferences) {
    std::mt19937_64 rng(31);
    for (int instance = 0; instance < 20; ++instance) {
        DenseNet net = build_dueling(6, 3 + static_cast<std::size_t>(instance % 3), 200 + static_cast<std::uint64_t>(instance));
        for (auto* stack : {&net.shared, &net.value, &net.advantage})
            for (auto& layer : *stack) layer.bias = oracle::random_vector(layer.bias.size(), rng, 0.2);
        const Eigen::VectorXd x = oracle::random_vector(6, rng);
        const Eigen::VectorXd y = oracle::random_vector(static_cast<Eigen::Index>(net.output_dim()), rng);
        const auto fr = forward(net, x);
        const auto scaled = backward(net, fr.trace, fr.output - y, JunctionGrad::Rescaled);
        const GradientSet fd = finite_diff_grad(net, x, [&](const Eigen::VectorXd& o) { return 0.5 * (o - y).squaredNorm(); });
        const double k = 1.0 / std::sqrt(2.0);
        const Matrix want = k * fd.shared[0].weight;
        EXPECT_LT((scaled.params.shared[0].weight - want).cwiseAbs().maxCoeff(),
                  1e-6 * std::max(1e-3, want.cwiseAbs().maxCoeff()));
        EXPECT_LT((scaled.params.value[1].weight - fd.value[1].weight).cwiseAbs().maxCoeff(),
                  1e-6 * std::max(1e-3, fd.value[1].weight.cwiseAbs().maxCoeff()));
    }
}

TEST(Saliency, ZeroValueStreamGivesZeroValueSaliency) {
    DenseNet net = build_dueling(70, 5, 2);
    net.value[0].weight.setZero();
    std::mt19937_64 rng(1);
    const auto s = saliency(net, oracle::random_vector(70, rng));
    EXPECT_EQ(s.value.size(), 70);
    EXPECT_EQ(s.advantage.size(), 70);
    EXPECT_TRUE((s.value.array() == 0.0).all());
}

TEST(Saliency, MatchesFiniteDifferenceInputJacobian) {
    std::mt19937_64 rng(17);
    const double h = 1e-6;
    for (int instance = 0; instance < 10; ++instance) {
        DenseNet net = build_dueling(12, 5, 50 + static_cast<std::uint64_t>(instance));
        for (auto* stack : {&net.shared, &net.value, &net.advantage})
            for (auto& layer : *stack) layer.bias = oracle::random_vector(layer.bias.size(), rng, 0.2);
        const Eigen::VectorXd x = oracle::random_vector(12, rng);
        const auto sal = saliency(net, x);
        const auto base = dueling_outputs(net, x);
        EXPECT_EQ(sal.best_action, argmax_lowest(base.adv));
        for (Eigen::Index i = 0; i < 12; ++i) {
            Eigen::VectorXd up = x, dn = x;
            up(i) += h;
            dn(i) -= h;
            const auto ou = dueling_outputs(net, up);
            const auto od = dueling_outputs(net, dn);
            const double dv = std::abs((ou.v - od.v) / (2 * h));
            const double da = std::abs((ou.adv(sal.best_action) - od.adv(sal.best_action)) / (2 * h));
            EXPECT_NEAR(sal.value(i), dv, 1e-6 * std::max(1.0, dv));
            EXPECT_NEAR(sal.advantage(i), da, 1e-6 * std::max(1.0, da));
            EXPECT_GE(sal.value(i), 0.0);
            EXPECT_GE(sal.advantage(i), 0.0);
        }
    }
}

TEST(Saliency, SingleStreamUnsupported) {
    EXPECT_THROW(saliency(build_single_stream(70, 5, 1), Eigen::VectorXd::Zero(70)), UnsupportedTopology);
}

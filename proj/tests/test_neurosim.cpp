#include <gtest/gtest.h>

#include <map>

#include "spikelink/neurosim.hpp"
#include "spikelink/rng.hpp"

using namespace spikelink;

TEST(Parrot, ShiftsOneTick) {
  ParrotNetwork p(4);
  SimClock c0(0.05, 0);
  SpikeBatch in{0, {{0, 0.01}}};
  auto out0 = p.step(in, c0);
  EXPECT_TRUE(out0.events.empty());
  SimClock c1(0.05, 1);
  auto out1 = p.step(SpikeBatch{1, {}}, c1);
  ASSERT_EQ(out1.events.size(), 1u);
  EXPECT_EQ(out1.events[0].neuron_id, 0u);
  EXPECT_NEAR(out1.events[0].time, 0.06, 1e-15);
  EXPECT_EQ(out1.tick_index, 1);
  EXPECT_TRUE(batch_is_valid(out1, 0.05, 4));
}

TEST(Parrot, EmptyInEmptyOut) {
  ParrotNetwork p(3);
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(p.step(SpikeBatch{k, {}}, SimClock(0.05, k)).events.empty());
}

TEST(Parrot, ZeroDelayForwards) {
  ParrotNetwork p(2, 0);
  SpikeBatch in{3, {{1, 0.16}, {0, 0.17}}};
  auto out = p.step(in, SimClock(0.05, 3));
  EXPECT_EQ(out.tick_index, 3);
  EXPECT_EQ(out.events, in.events);
}

TEST(Parrot, RejectsUnknownNeuron) {
  ParrotNetwork p(2);
  EXPECT_THROW(p.step(SpikeBatch{0, {{2, 0.0}}}, SimClock(0.05, 0)), UnknownNeuron);
  EXPECT_THROW(ParrotNetwork(2, -1), BadParameter);
}

// Random batches: every tick-k input reappears at tick k+1, per neuron, with
// time + dt, and 1e5 spikes in give 1e5 spikes out once the tail is drained.
TEST(Parrot, MultisetShiftAndConservation) {
  const double dt = 0.05;
  const std::size_t n = 50;
  ParrotNetwork p(n);
  RandomStream rng(99, 1);
  const std::size_t total = 100000;
  std::size_t sent = 0, received = 0;
  std::vector<SpikeEvent> previous;
  std::int64_t k = 0;
  while (sent < total || !previous.empty()) {
    SpikeBatch in{k, {}};
    const std::size_t want = sent < total ? std::min<std::size_t>(total - sent, rng() % 400) : 0;
    for (std::size_t i = 0; i < want; ++i)
      in.events.push_back({static_cast<NeuronId>(rng() % n), (static_cast<double>(k) + rng.uniform()) * dt});
    sent += want;
    auto out = p.step(in, SimClock(dt, k));
    received += out.events.size();
    std::map<NeuronId, std::vector<double>> expect, got;
    for (const auto& e : previous) expect[e.neuron_id].push_back(e.time + dt);
    for (const auto& e : out.events) got[e.neuron_id].push_back(e.time);
    ASSERT_EQ(expect.size(), got.size());
    for (auto& [id, times] : expect) {
      auto& g = got[id];
      ASSERT_EQ(times.size(), g.size());
      for (std::size_t i = 0; i < times.size(); ++i) EXPECT_DOUBLE_EQ(times[i], g[i]);
    }
    previous = in.events;
    ++k;
  }
  EXPECT_EQ(sent, total);
  EXPECT_EQ(received, total);
  EXPECT_EQ(p.spikes_in(), total);
  EXPECT_EQ(p.spikes_out(), total);
}

namespace {

DemoNetworkParams two_neurons(double weight) {
  DemoNetworkParams p;
  p.n_neurons = 2;
  p.weight = weight;
  return p;
}

}  // namespace

TEST(Demo, ZeroInputZeroOutput) {
  DemoNetwork net(two_neurons(30.0));
  std::size_t spikes = 0;
  for (int k = 0; k < 100; ++k) spikes += net.step(SpikeBatch{k, {}}, SimClock(0.05, k)).events.size();
  EXPECT_EQ(spikes, 0u);
}

TEST(Demo, StrongSpikeFiresOnceWithinOneMillisecond) {
  // One step of drive J charges the membrane to J(1 - exp(-dt/tau)); with
  // tau 20 ms and dt 1 ms that needs J > 20.5 to cross threshold 1.
  DemoNetwork net(two_neurons(50.0));
  const double t_in = 0.0123;
  std::vector<SpikeEvent> out;
  for (int k = 0; k < 20; ++k) {
    SpikeBatch in{k, {}};
    if (k == 0) in.events.push_back({1, t_in});
    auto b = net.step(in, SimClock(0.05, k));
    out.insert(out.end(), b.events.begin(), b.events.end());
  }
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].neuron_id, 1u);
  EXPECT_GE(out[0].time, 0.012 - 1e-12);
  EXPECT_LE(out[0].time - t_in, 0.001);
}

TEST(Demo, SustainedInputModerateRate) {
  // 100 Hz input at a weight too small to fire on a single spike.
  DemoNetwork net(two_neurons(12.0));
  const double dt = 0.05;
  std::size_t out = 0;
  const int ticks = 200;  // 10 s
  for (int k = 0; k < ticks; ++k) {
    SpikeBatch in{k, {}};
    for (int j = 0; j < 5; ++j) in.events.push_back({0, k * dt + j * 0.01});
    out += net.step(in, SimClock(dt, k)).events.size();
  }
  const double rate = static_cast<double>(out) / (ticks * dt);
  EXPECT_GT(rate, 0.0);
  EXPECT_LT(rate, 100.0);
}

TEST(Demo, LateralInhibitionSuppressesPartner) {
  // Neuron 1 fires on its bias alone; neuron 0 is driven by strong input
  // spikes every 5 ms and inhibits neuron 1 through the lateral matrix.
  auto p = two_neurons(0.0);
  p.bias = 1.5;
  p.input_weights = {50.0, 0.0};
  DemoNetwork free_net(p);
  p.lateral = Matrix(2, 2, 0.0);
  p.lateral(0, 1) = -200.0;
  DemoNetwork inhibited(p);
  std::size_t free1 = 0, inh1 = 0;
  for (int k = 0; k < 40; ++k) {
    SpikeBatch in{k, {}};
    for (int j = 0; j < 10; ++j) in.events.push_back({0, k * 0.05 + j * 0.005 + 0.0005});
    for (auto& e : free_net.step(in, SimClock(0.05, k)).events) free1 += e.neuron_id == 1;
    for (auto& e : inhibited.step(in, SimClock(0.05, k)).events) inh1 += e.neuron_id == 1;
  }
  EXPECT_GT(free1, 0u);
  EXPECT_LT(inh1, free1);
}

TEST(Demo, ValidatesParameters) {
  auto p = two_neurons(1.0);
  p.input_weights = {1.0};
  EXPECT_THROW(DemoNetwork{p}, DimensionMismatch);
  p.input_weights = {1.0, std::nan("")};
  EXPECT_THROW(DemoNetwork{p}, BadParameter);
  DemoNetwork ok(two_neurons(1.0));
  EXPECT_THROW(ok.step(SpikeBatch{0, {{5, 0.0}}}, SimClock(0.05, 0)), UnknownNeuron);
  EXPECT_THROW(ok.step(SpikeBatch{0, {}}, SimClock(0.0015, 0)), BadParameter);
}

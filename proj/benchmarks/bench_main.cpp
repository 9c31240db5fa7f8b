#include <benchmark/benchmark.h>

#include <string>

#include "phonon/circuit.hpp"
#include "phonon/config.hpp"
#include "phonon/oracle.hpp"
#include "phonon/protocol.hpp"
#include "phonon/sampler.hpp"
#include "phonon/waveguide.hpp"

using namespace phonon;

namespace {

ExperimentConfig load(const char* name) { return load_config(std::string(PHONON_CONFIG_DIR) + "/" + name + ".yaml"); }

void BM_FixedSampler(benchmark::State& state) {
  const PatternSampler s(std::vector<double>{0.99, 0.004, 0.004, 0.002});
  std::uint64_t first = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(s.run(first, state.range(0), {.seed = 1}));
    first += state.range(0);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FixedSampler)->Arg(1 << 16)->Arg(1 << 20);

void BM_JitteredBellSetting(benchmark::State& state) {
  ExperimentConfig c = load("bell");
  protocol::RunOptions opts;
  opts.trials = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(protocol::run_experiment(c, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 4);
}
BENCHMARK(BM_JitteredBellSetting)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

void BM_PhaseResponseEvaluate(benchmark::State& state) {
  const ExperimentConfig c = load("time_bin");
  const auto engine = protocol::make_engine(c.engine);
  const auto response = protocol::PhaseResponse::compute(c, *engine);
  std::vector<double> out;
  double phi = 0.0;
  for (auto _ : state) {
    response.evaluate(phi, out);
    benchmark::DoNotOptimize(out.data());
    phi += 0.01;
  }
}
BENCHMARK(BM_PhaseResponseEvaluate);

void BM_PhaseResponseCompute(benchmark::State& state) {
  ExperimentConfig c = load("time_bin");
  c.engine.kind = state.range(0) ? EngineKind::Fock : EngineKind::Gaussian;
  c.engine.truncation = 4;
  const auto engine = protocol::make_engine(c.engine);
  for (auto _ : state) benchmark::DoNotOptimize(protocol::PhaseResponse::compute(c, *engine));
}
BENCHMARK(BM_PhaseResponseCompute)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EngineRandomCircuit(benchmark::State& state) {
  SplitMix64 rng(3);
  const auto rc = oracle::random_circuit(rng, {.min_modes = 6, .max_modes = 6});
  const auto engine = state.range(0) ? make_fock_engine(5) : make_gaussian_engine();
  for (auto _ : state) benchmark::DoNotOptimize(engine->evaluate(rc.circuit, rc.detectors));
}
BENCHMARK(BM_EngineRandomCircuit)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_G2TauCurve(benchmark::State& state) {
  SplitMix64 rng(1);
  const auto s = waveguide::sample_jittered_spectrum({8.3e6, 0.8e6, 12}, rng, 15e6);
  const auto delays = waveguide::grid(0.0, 400e-9, 0.25e-9);
  for (auto _ : state) benchmark::DoNotOptimize(waveguide::g2_tau_curve(s, delays));
}
BENCHMARK(BM_G2TauCurve);

}  // namespace

BENCHMARK_MAIN();

// Serial reference kernels against their OpenMP counterparts.
//
//   ./momsens_bench --benchmark_filter=Design
//   OMP_NUM_THREADS=8 ./momsens_bench
#include <benchmark/benchmark.h>

#include <vector>

#include "momsens/cme.hpp"
#include "momsens/global_sens.hpp"
#include "momsens/model.hpp"
#include "momsens/moments.hpp"

namespace {

using namespace momsens;

const ReactionNetwork& dimerization() {
  static const auto net = load_model(MOMSENS_MODEL_DIR "/dimerization.model");
  return net;
}

void BM_DesignSerial(benchmark::State& state) {
  const auto system = build_moment_system(dimerization());
  const auto design = sample_design(ParameterBox::from_network(dimerization()), state.range(0), 7);
  const auto grid = uniform_grid(10.0, 101);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_design_serial(design, system, grid));
  state.SetItemsProcessed(state.iterations() * design.matrices() * design.samples());
}

void BM_DesignParallel(benchmark::State& state) {
  const auto system = build_moment_system(dimerization());
  const auto design = sample_design(ParameterBox::from_network(dimerization()), state.range(0), 7);
  const auto grid = uniform_grid(10.0, 101);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_design(design, system, grid));
  state.SetItemsProcessed(state.iterations() * design.matrices() * design.samples());
}

// Two independent immigration-death species give a dense 2-D lattice.
struct Lattice {
  ReactionNetwork network = parse_model(
      "species A init=20\nspecies B init=20\n"
      "param k = 5\nparam d = 0.1\n"
      "reaction ia: 0 -> A @ k\nreaction da: A -> 0 @ d\n"
      "reaction ib: 0 -> B @ k\nreaction db: B -> 0 @ d\n");
  StateSpace space;
  Generator gen;

  explicit Lattice(std::int64_t bound)
      : space(enumerate_states(network, std::vector<std::int64_t>{bound, bound})),
        gen(build_generator(space, network, ParameterPoint::nominal(network))) {}
};

void BM_MatvecSerial(benchmark::State& state) {
  const Lattice lattice(state.range(0));
  std::vector<double> x(lattice.gen.n, 1.0 / lattice.gen.n), y(lattice.gen.n);
  for (auto _ : state) {
    multiply_serial(lattice.gen, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * lattice.gen.n);
}

void BM_MatvecParallel(benchmark::State& state) {
  const Lattice lattice(state.range(0));
  std::vector<double> x(lattice.gen.n, 1.0 / lattice.gen.n), y(lattice.gen.n);
  for (auto _ : state) {
    multiply_parallel(lattice.gen, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * lattice.gen.n);
}

}  // namespace

BENCHMARK(BM_DesignSerial)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DesignParallel)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatvecSerial)->Arg(300)->Arg(1000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MatvecParallel)->Arg(300)->Arg(1000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();

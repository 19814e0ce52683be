#include "modwave/bloch.hpp"
#include "modwave/dynamics.hpp"
#include "modwave/model.hpp"
#include "modwave/profile.hpp"
#include "modwave/propagator.hpp"
#include "modwave/spectral.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace modwave;

namespace {

const LambdaOmegaParams kParams{0.03, 0.35};

const ReactionSystem& lo_system() {
  static const ReactionSystem s = make_lambda_omega(kParams);
  return s;
}

const WaveProfile& lo_profile() {
  static const WaveProfile w = solve_profile(lo_system(), kParams.k(), lambda_omega_profile(kParams, 32), 32);
  return w;
}

Field bump(const Grid& g, double amp) {
  Field out(g.size(), 2);
  const double mid = 0.5 * g.length();
  for (int i = 0; i < g.size(); ++i) {
    const double s = (g.x(i) - mid) / 4.0;
    out(i, 0) = amp * std::exp(-s * s);
    out(i, 1) = -0.5 * amp * std::exp(-s * s);
  }
  return out;
}

}  // namespace

static void BM_BlochRoundTrip(benchmark::State& state) {
  const Grid g{static_cast<int>(state.range(0)), 32};
  const Field f = bump(g, 1.0);
  for (auto _ : state) {
    Field back = bloch_inverse(bloch_forward(f, g));
    benchmark::DoNotOptimize(back.data());
  }
  state.SetItemsProcessed(state.iterations() * g.size());
}
BENCHMARK(BM_BlochRoundTrip)->Arg(64)->Arg(256)->Arg(512);

static void BM_SpectrumScan(benchmark::State& state) {
  ScanOptions opt;
  opt.jobs = 1;
  for (auto _ : state) {
    SpectralScan scan = spectrum_scan(lo_profile(), static_cast<int>(state.range(0)), opt);
    benchmark::DoNotOptimize(scan.summary);
  }
}
BENCHMARK(BM_SpectrumScan)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_ETDRK4Step(benchmark::State& state) {
  const Grid g{static_cast<int>(state.range(0)), 32};
  const Integrator integ(lo_system(), lo_profile(), g, 0.0625);
  Field u = tile(lo_profile().values, g) + bump(g, 1e-3);
  for (auto _ : state) {
    integ.step(u);
    benchmark::DoNotOptimize(u.data());
  }
}
BENCHMARK(BM_ETDRK4Step)->Arg(64)->Arg(512);

static void BM_PhaseExtraction(benchmark::State& state) {
  const Grid g{static_cast<int>(state.range(0)), 32};
  const Vec y = Vec::LinSpaced(g.size(), 0.0, g.length() - g.h()).array() - 0.01;
  const Field u = evaluate_profile(lo_profile(), y) + bump(g, 1e-4);
  for (auto _ : state) {
    PhaseExtraction ex = extract_phase(u, lo_profile(), g);
    benchmark::DoNotOptimize(ex.psi.data());
  }
}
BENCHMARK(BM_PhaseExtraction)->Arg(64)->Arg(512);

static void BM_PropagatorApply(benchmark::State& state) {
  static const PropagatorPlan plan(lo_profile(), 64);
  const Field g = bump(plan.grid(), 1.0);
  for (auto _ : state) {
    Field out = apply_S(plan, g, 10.0);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_PropagatorApply)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

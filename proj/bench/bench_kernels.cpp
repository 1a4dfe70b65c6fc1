// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <numbers>

#include "orbitlab/enumerate.hpp"
#include "orbitlab/equidist.hpp"

using namespace orbitlab;

namespace {

BallSpec ball(int n, const char* t) {
  BallSpec s;
  s.n = n;
  s.t_inf = Radius::parse(t);
  return s;
}

BallSpec zinvp(const char* t, const char* tp) {
  BallSpec s = ball(2, t);
  s.prime = 2;
  s.invert_prime = true;
  s.t_p = Radius::parse(tp);
  return s;
}

OrbitVector golden() {
  OrbitVector v;
  v.real = {Surd::parse("1"), Surd::parse("sqrt(2)")};
  return v;
}

std::vector<NamedTest> sectors() {
  constexpr Real pi = std::numbers::pi_v<Real>;
  return {{"a", RealAnnulusSector{1, 2, 0, pi / 2}}, {"b", RealAnnulusSector{1, 3}}};
}

void BM_sl2z_serial(benchmark::State& st) {
  const auto spec = ball(2, std::to_string(st.range(0)).c_str());
  for (auto _ : st) benchmark::DoNotOptimize(serial::enum_sl2z(spec));
}
void BM_sl2z_omp(benchmark::State& st) {
  const auto spec = ball(2, std::to_string(st.range(0)).c_str());
  for (auto _ : st) benchmark::DoNotOptimize(enum_sl2z(spec));
}

void BM_sl2zp_serial(benchmark::State& st) {
  const auto spec = zinvp("60", std::to_string(st.range(0)).c_str());
  for (auto _ : st) benchmark::DoNotOptimize(serial::enum_sl2_zinvp(spec));
}
void BM_sl2zp_omp(benchmark::State& st) {
  const auto spec = zinvp("60", std::to_string(st.range(0)).c_str());
  for (auto _ : st) benchmark::DoNotOptimize(enum_sl2_zinvp(spec));
}

void BM_sl3z_count_serial(benchmark::State& st) {
  const auto spec = ball(3, std::to_string(st.range(0)).c_str());
  for (auto _ : st) benchmark::DoNotOptimize(serial::count_slnz(spec));
}
void BM_sl3z_count_omp(benchmark::State& st) {
  const auto spec = ball(3, std::to_string(st.range(0)).c_str());
  for (auto _ : st) benchmark::DoNotOptimize(count_slnz(spec));
}

void BM_orbit_counts_serial(benchmark::State& st) {
  const auto spec = ball(2, std::to_string(st.range(0)).c_str());
  const auto v = golden();
  const auto tests = sectors();
  for (auto _ : st) benchmark::DoNotOptimize(serial::orbit_counts(spec, v, tests));
}
void BM_orbit_counts_omp(benchmark::State& st) {
  const auto spec = ball(2, std::to_string(st.range(0)).c_str());
  const auto v = golden();
  const auto tests = sectors();
  for (auto _ : st) benchmark::DoNotOptimize(orbit_counts(spec, v, tests));
}

}  // namespace

BENCHMARK(BM_sl2z_serial)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sl2z_omp)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sl2zp_serial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sl2zp_omp)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sl3z_count_serial)->Arg(8)->Arg(11)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sl3z_count_omp)->Arg(8)->Arg(11)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_orbit_counts_serial)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_orbit_counts_omp)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

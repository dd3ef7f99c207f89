#include <benchmark/benchmark.h>

#include <random>

#include "soiverify/detector.hpp"
#include "soiverify/geo.hpp"
#include "soiverify/ingest.hpp"
#include "soiverify/simulator.hpp"
#include "soiverify/soi.hpp"

using namespace soiverify;

namespace {

std::vector<std::pair<geo::GeoPoint, geo::GeoPoint>> random_pairs(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-180.0, 180.0);
  std::vector<std::pair<geo::GeoPoint, geo::GeoPoint>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.emplace_back(geo::GeoPoint(lat(rng), lon(rng)), geo::GeoPoint(lat(rng), lon(rng)));
  }
  return out;
}

void BM_Haversine(benchmark::State& state) {
  auto pairs = random_pairs(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(geo::haversine(a, b).value);
  }
}
BENCHMARK(BM_Haversine);

void BM_RttBound(benchmark::State& state) {
  auto pairs = random_pairs(1024);
  std::vector<double> distances;
  for (const auto& [a, b] : pairs) distances.push_back(geo::haversine(a, b).value);
  std::size_t i = 0;
  for (auto _ : state) {
    const double d = distances[i++ & 1023];
    benchmark::DoNotOptimize(
        soi::min_rtt_bound(geo::DistanceKm{d}, 51.0, soi::Medium::FIBER).bound_ms);
  }
}
BENCHMARK(BM_RttBound);

void BM_AggregateMinRtt(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> rtt(1.0, 300.0);
  std::vector<ingest::Sample> samples;
  for (int p = 0; p < 500; ++p) {
    for (int s = 0; s < 20; ++s) {
      samples.push_back({"vp", p, s * 3600, rtt(rng)});
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ingest::aggregate_min_rtt(samples, ingest::kHistoricalWindowSeconds));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}
BENCHMARK(BM_AggregateMinRtt);

void BM_DetectScan(benchmark::State& state) {
  sim::SimScenario sc;
  sc.seed = 3;
  sc.n_probes = state.range(0);
  sc.n_vps = 50;
  sc.misreport_fraction = 0.05;
  auto world = sim::generate(sc);
  for (auto _ : state) {
    benchmark::DoNotOptimize(detector::detect(world.observations, world.probes, world.vps, {}));
  }
  state.SetItemsProcessed(state.iterations() * sc.n_probes * sc.n_vps);
}
BENCHMARK(BM_DetectScan)->Arg(1000)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();

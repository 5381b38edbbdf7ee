// Serial reference kernels against their OpenMP counterparts, plus the
// end-to-end projection of a simulated population.

#include <benchmark/benchmark.h>

#include "mfpca/kernels.hpp"
#include "mfpca/project.hpp"
#include "mfpca/simgen.hpp"

namespace {

using namespace mfpca;

struct Fixture {
    Eigen::MatrixXd centered;
    std::vector<CurveGroup> groups;
    std::vector<double> weights;
    Eigen::MatrixXd basis;

    explicit Fixture(int subjects, int curves_per_subject, int length) {
        centered = Eigen::MatrixXd::Random(subjects * curves_per_subject, length);
        for (int s = 0; s < subjects; ++s) {
            CurveGroup g;
            g.subject_id = std::to_string(s);
            for (int j = 0; j < curves_per_subject; ++j)
                g.members.push_back(static_cast<std::size_t>(s * curves_per_subject + j));
            groups.push_back(std::move(g));
        }
        weights.assign(static_cast<std::size_t>(length), 1.0 / length);
        basis = Eigen::MatrixXd::Random(length, 8);
    }
};

void BM_CrossMomentsSerial(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 20, 256);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::cross_moments(f.centered, f.groups));
}

void BM_CrossMomentsParallel(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 20, 256);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::cross_moments(f.centered, f.groups));
}

void BM_BandDepthsSerial(benchmark::State& state) {
    const Eigen::MatrixXd curves = Eigen::MatrixXd::Random(state.range(0), 256);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::band_depths(curves));
}

void BM_BandDepthsParallel(benchmark::State& state) {
    const Eigen::MatrixXd curves = Eigen::MatrixXd::Random(state.range(0), 256);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::band_depths(curves));
}

void BM_ProjectSerial(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 20, 256);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::project(f.centered, f.weights, f.basis));
}

void BM_ProjectParallel(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 20, 256);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::project(f.centered, f.weights, f.basis));
}

void BM_MfpcaProjectPopulation(benchmark::State& state) {
    const auto ref = synthetic_reference(SyntheticModelParams::ecg(), 59, 1);
    PopulationSpec spec;
    spec.n_subjects = static_cast<std::size_t>(state.range(0));
    spec.seed = 7;
    const CurveSet curves = synthesize_population(ref.model, ref.between_scores, ref.within, spec);
    for (auto _ : state) benchmark::DoNotOptimize(mfpca_project(ref.model, curves, {.per_occasion = true}));
}

} // namespace

BENCHMARK(BM_CrossMomentsSerial)->Arg(20)->Arg(60);
BENCHMARK(BM_CrossMomentsParallel)->Arg(20)->Arg(60);
BENCHMARK(BM_BandDepthsSerial)->Arg(50)->Arg(200);
BENCHMARK(BM_BandDepthsParallel)->Arg(50)->Arg(200);
BENCHMARK(BM_ProjectSerial)->Arg(20)->Arg(60);
BENCHMARK(BM_ProjectParallel)->Arg(20)->Arg(60);
BENCHMARK(BM_MfpcaProjectPopulation)->Arg(59);

BENCHMARK_MAIN();

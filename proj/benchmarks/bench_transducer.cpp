#include "wug/synth.hpp"
#include "wug/transducer.hpp"

#include <benchmark/benchmark.h>

#include <vector>

namespace {

using namespace wug;

struct Fixture {
    ModelParams params;
    std::vector<InflectionExample> examples;

    Fixture() {
        SynthConfig sc;
        sc.n_lexemes = 40;
        sc.n_slots = 4;
        sc.seed = 7;
        SynthCorpus corpus = generate(sc);
        for (const auto& p : corpus.paradigms) {
            CollapsedParadigm c = collapse(p);
            for (const auto& [slot, form] : c.cells) {
                if (slot == c.lemma_slot) continue;
                examples.push_back({c.lemma_form(), slot, form});
            }
        }
        TrainConfig tc;
        tc.embedding_dim = 16;
        tc.hidden_dim = 32;
        tc.max_epochs = 0;
        params = train(examples, examples, tc);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_ForwardLogprob(benchmark::State& state) {
    Fixture& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& ex = f.examples[i++ % f.examples.size()];
        benchmark::DoNotOptimize(forward_logprob(f.params, ex.lemma, ex.slot, ex.target));
    }
}
BENCHMARK(BM_ForwardLogprob);

void BM_Decode(benchmark::State& state) {
    Fixture& f = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& ex = f.examples[i++ % f.examples.size()];
        benchmark::DoNotOptimize(decode(f.params, ex.lemma, ex.slot, static_cast<int>(state.range(0))));
    }
}
BENCHMARK(BM_Decode)->Arg(1)->Arg(4)->Arg(8);

void BM_LossAndGradient(benchmark::State& state) {
    Fixture& f = fixture();
    std::vector<InflectionExample> batch(f.examples.begin(),
                                         f.examples.begin() + std::min<std::size_t>(32, f.examples.size()));
    for (auto _ : state) {
        LossAndGradient lg = loss_and_gradient(f.params, batch);
        benchmark::DoNotOptimize(lg.loss);
        benchmark::DoNotOptimize(lg.gradients);
    }
}
BENCHMARK(BM_LossAndGradient);

} // namespace

BENCHMARK_MAIN();

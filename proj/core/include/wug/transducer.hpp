#ifndef WUG_TRANSDUCER_HPP
#define WUG_TRANSDUCER_HPP

#include "wug/autodiff.hpp"
#include "wug/corpus.hpp"
#include "wug/paradigm_prep.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wug {

// One training/scoring instance: lemma string in, inflected form out,
// conditioned on the (merged) slot features.
struct InflectionExample {
    std::string lemma;
    MergedSlot slot;
    std::string target;
};

// Character/feature index spaces. Characters are UTF-8 codepoints; indices
// are dense and deterministic (specials first, then sorted codepoints).
struct Vocabulary {
    std::vector<std::string> chars;
    std::map<std::string, int> char_index;
    FeatureInventory feature_index;

    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    static Vocabulary build(const std::vector<InflectionExample>& examples);
    int char_id(const std::string& c) const;      // UNK fallback
    int size() const { return static_cast<int>(chars.size()); }
};

// Splits a UTF-8 string into codepoint substrings.
std::vector<std::string> utf8_chars(const std::string& s);

struct TrainConfig {
    int embedding_dim = 64;
    int hidden_dim = 128;
    double learning_rate = 1e-3;
    int batch_size = 32;
    int max_epochs = 50;
    int patience = 5;
    double grad_clip = 5.0;
    std::uint64_t seed = 1;

    void validate() const;
};

// Learned parameters of the monotonic hard-attention transducer. The
// encoder is a bidirectional tanh RNN over the lemma; the decoder a tanh
// RNN over emitted characters, initialized from the slot vector. Emission
// conditions on (decoder state, attended encoder position, slot vector);
// transition scores condition on (source and target encoder states,
// decoder state) and are normalized over non-regressing moves.
struct ModelParams {
    Vocabulary vocab;
    TrainConfig config;

    ad::Tensor char_emb;                       // V x de
    ad::Tensor feat_proj;                      // de x F
    ad::Tensor enc_fwd_wx, enc_fwd_wh, enc_fwd_b;
    ad::Tensor enc_bwd_wx, enc_bwd_wh, enc_bwd_b;
    ad::Tensor dec_wx, dec_wh, dec_b;          // recurrence
    ad::Tensor dec_init_w, dec_init_b;         // slot -> initial state
    ad::Tensor emit_wh, emit_we, emit_ws, emit_b;   // fusion MLP
    ad::Tensor emit_out_w, emit_out_b;         // -> V logits
    ad::Tensor trans_wsrc, trans_wdst, trans_wdec, trans_b;  // fusion MLP
    ad::Tensor trans_v;                        // 1 x dm score head

    static ModelParams init(const Vocabulary& vocab, const TrainConfig& config);

    // Fixed traversal order shared by flattening, gradients and checkpoints.
    std::vector<std::pair<std::string, ad::Tensor*>> named_tensors();
    std::vector<std::pair<std::string, const ad::Tensor*>> named_tensors() const;

    void check_finite() const;                 // throws NumericError
};

// Index sequences ready for the lattice: BOS/EOS-framed lemma, target
// characters with a final EOS, and present slot-feature indices.
struct EncodedExample {
    std::vector<int> lemma_ids;
    std::vector<int> feature_ids;              // unseen features are dropped
    std::vector<int> target_ids;
    int dropped_features = 0;
};

EncodedExample encode_example(const Vocabulary& vocab, const std::string& lemma, const MergedSlot& slot,
                              const std::string& target);

// Forward lattice over monotone alignments, log-space. Row j holds the
// scores after the j-th emission (row `target_len` emits EOS); logsumexp of
// the last row is the sequence log-probability.
struct AlignmentLattice {
    int source_len = 0;
    int target_len = 0;                        // |w|, excluding EOS
    std::vector<std::vector<double>> alpha;    // (target_len+1) x source_len
    double log_prob = 0.0;
};

AlignmentLattice forward_lattice(const ModelParams& params, const EncodedExample& ex);

// log p(target | lemma, slot), the exact sum over all monotone alignments.
double forward_logprob(const ModelParams& params, const std::string& lemma, const MergedSlot& slot,
                       const std::string& target);

// Mean negative log-likelihood over the batch and its exact gradient, in
// the named_tensors() order. Reverse-mode through the log-space lattice.
struct LossAndGradient {
    double loss = 0.0;
    std::vector<ad::Tensor> gradients;
};

LossAndGradient loss_and_gradient(const ModelParams& params, const std::vector<InflectionExample>& batch);

struct TrainStats {
    int epochs_run = 0;
    int best_epoch = -1;
    double best_dev_loglik = 0.0;
    int dropped_features = 0;
};

// Adam with gradient clipping; dev mean log-likelihood selects the returned
// epoch, early stop after `patience` non-improving epochs. Deterministic
// given (data, config).
ModelParams train(const std::vector<InflectionExample>& train_set, const std::vector<InflectionExample>& dev_set,
                  const TrainConfig& config, TrainStats* stats = nullptr);

struct DecodeResult {
    std::string output;
    double log_prob = 0.0;
    bool ok = false;                           // false: length cap hit, no EOS
};

// Beam search where each hypothesis carries its exact forward column, so
// scores are exact prefix log-probabilities and the returned score equals
// forward_logprob of the returned string. Length cap 2*|lemma|+10.
DecodeResult decode(const ModelParams& params, const std::string& lemma, const MergedSlot& slot, int beam_width);

// Fraction of test triples whose decode matches the gold form exactly;
// decode failures count as incorrect.
double accuracy(const ModelParams& params, const std::vector<InflectionExample>& test_set, int beam_width);

// Versioned JSON checkpoint; parameters round-trip bit-exact.
std::string save_checkpoint(const ModelParams& params, std::uint64_t train_hash, std::uint64_t dev_hash);
ModelParams load_checkpoint(const std::string& json_text);

std::uint64_t dataset_hash(const std::vector<InflectionExample>& examples);

} // namespace wug

#endif

#include "wug/transducer.hpp"

#include "wug/errors.hpp"
#include "wug/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

namespace wug {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMaskValue = -1e30;

using Vec = std::vector<double>;

void matvec_into(const ad::Tensor& w, const Vec& x, Vec& y) {
    y.assign(w.rows, 0.0);
    for (int i = 0; i < w.rows; ++i) {
        const double* row = &w.v[static_cast<std::size_t>(i) * w.cols];
        double s = 0.0;
        for (int j = 0; j < w.cols; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

void add_into(Vec& y, const Vec& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
}

void tanh_inplace(Vec& y) {
    for (double& v : y) v = std::tanh(v);
}

double logsumexp(const double* v, int n) {
    double mx = kNegInf;
    for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
    if (!std::isfinite(mx)) return mx;
    double z = 0.0;
    for (int i = 0; i < n; ++i) z += std::exp(v[i] - mx);
    return mx + std::log(z);
}

void log_softmax_inplace(Vec& v) {
    double lz = logsumexp(v.data(), static_cast<int>(v.size()));
    for (double& x : v) x -= lz;
}

} // namespace

// ---------------------------------------------------------------------------
// Vocabulary and encoding
// ---------------------------------------------------------------------------

std::vector<std::string> utf8_chars(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char b = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((b & 0x80) == 0x00) len = 1;
        else if ((b & 0xE0) == 0xC0) len = 2;
        else if ((b & 0xF0) == 0xE0) len = 3;
        else if ((b & 0xF8) == 0xF0) len = 4;
        len = std::min(len, s.size() - i);
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

Vocabulary Vocabulary::build(const std::vector<InflectionExample>& examples) {
    std::set<std::string> chars;
    std::set<std::string> feats;
    for (const auto& ex : examples) {
        for (auto& c : utf8_chars(ex.lemma)) chars.insert(c);
        for (auto& c : utf8_chars(ex.target)) chars.insert(c);
        feats.insert(ex.slot.features.begin(), ex.slot.features.end());
    }
    Vocabulary v;
    v.chars = {"<pad>", "<bos>", "<eos>", "<unk>"};
    v.chars.insert(v.chars.end(), chars.begin(), chars.end());
    for (std::size_t i = 0; i < v.chars.size(); ++i) v.char_index[v.chars[i]] = static_cast<int>(i);
    v.feature_index = FeatureInventory::build(feats);
    return v;
}

int Vocabulary::char_id(const std::string& c) const {
    auto it = char_index.find(c);
    return it == char_index.end() ? kUnk : it->second;
}

EncodedExample encode_example(const Vocabulary& vocab, const std::string& lemma, const MergedSlot& slot,
                              const std::string& target) {
    if (lemma.empty()) throw InputError("empty lemma");
    if (target.empty()) throw InputError("empty target form");
    EncodedExample ex;
    ex.lemma_ids.push_back(Vocabulary::kBos);
    for (auto& c : utf8_chars(lemma)) ex.lemma_ids.push_back(vocab.char_id(c));
    ex.lemma_ids.push_back(Vocabulary::kEos);
    for (auto& c : utf8_chars(target)) ex.target_ids.push_back(vocab.char_id(c));
    ex.target_ids.push_back(Vocabulary::kEos);
    for (const auto& f : slot.features) {
        int id = vocab.feature_index.lookup(f);
        if (id < 0)
            ++ex.dropped_features;
        else
            ex.feature_ids.push_back(id);
    }
    return ex;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (embedding_dim <= 0 || hidden_dim <= 0 || batch_size <= 0) throw ConfigError("model dims must be positive");
    if (learning_rate <= 0.0 || grad_clip <= 0.0) throw ConfigError("learning rate and clip must be positive");
    if (max_epochs < 0 || patience < 0) throw ConfigError("epochs and patience must be non-negative");
}

std::vector<std::pair<std::string, ad::Tensor*>> ModelParams::named_tensors() {
    return {
        {"char_emb", &char_emb},       {"feat_proj", &feat_proj},
        {"enc_fwd_wx", &enc_fwd_wx},   {"enc_fwd_wh", &enc_fwd_wh},   {"enc_fwd_b", &enc_fwd_b},
        {"enc_bwd_wx", &enc_bwd_wx},   {"enc_bwd_wh", &enc_bwd_wh},   {"enc_bwd_b", &enc_bwd_b},
        {"dec_wx", &dec_wx},           {"dec_wh", &dec_wh},           {"dec_b", &dec_b},
        {"dec_init_w", &dec_init_w},   {"dec_init_b", &dec_init_b},
        {"emit_wh", &emit_wh},         {"emit_we", &emit_we},         {"emit_ws", &emit_ws},
        {"emit_b", &emit_b},           {"emit_out_w", &emit_out_w},   {"emit_out_b", &emit_out_b},
        {"trans_wsrc", &trans_wsrc},   {"trans_wdst", &trans_wdst},   {"trans_wdec", &trans_wdec},
        {"trans_b", &trans_b},         {"trans_v", &trans_v},
    };
}

std::vector<std::pair<std::string, const ad::Tensor*>> ModelParams::named_tensors() const {
    auto mut = const_cast<ModelParams*>(this)->named_tensors();
    std::vector<std::pair<std::string, const ad::Tensor*>> out;
    out.reserve(mut.size());
    for (auto& [name, t] : mut) out.emplace_back(name, t);
    return out;
}

ModelParams ModelParams::init(const Vocabulary& vocab, const TrainConfig& config) {
    config.validate();
    ModelParams p;
    p.vocab = vocab;
    p.config = config;
    int de = config.embedding_dim;
    int dh = config.hidden_dim;
    int denc = 2 * dh;
    int dm = dh;
    int V = vocab.size();
    int F = std::max<int>(1, static_cast<int>(vocab.feature_index.size()));

    p.char_emb = ad::Tensor(V, de);
    p.feat_proj = ad::Tensor(de, F);
    p.enc_fwd_wx = ad::Tensor(dh, de);
    p.enc_fwd_wh = ad::Tensor(dh, dh);
    p.enc_fwd_b = ad::Tensor(dh, 1);
    p.enc_bwd_wx = ad::Tensor(dh, de);
    p.enc_bwd_wh = ad::Tensor(dh, dh);
    p.enc_bwd_b = ad::Tensor(dh, 1);
    p.dec_wx = ad::Tensor(dh, de);
    p.dec_wh = ad::Tensor(dh, dh);
    p.dec_b = ad::Tensor(dh, 1);
    p.dec_init_w = ad::Tensor(dh, de);
    p.dec_init_b = ad::Tensor(dh, 1);
    p.emit_wh = ad::Tensor(dm, dh);
    p.emit_we = ad::Tensor(dm, denc);
    p.emit_ws = ad::Tensor(dm, de);
    p.emit_b = ad::Tensor(dm, 1);
    p.emit_out_w = ad::Tensor(V, dm);
    p.emit_out_b = ad::Tensor(V, 1);
    p.trans_wsrc = ad::Tensor(dm, denc);
    p.trans_wdst = ad::Tensor(dm, denc);
    p.trans_wdec = ad::Tensor(dm, dh);
    p.trans_b = ad::Tensor(dm, 1);
    p.trans_v = ad::Tensor(1, dm);

    SplitMix64 rng(config.seed);
    for (auto& [name, t] : p.named_tensors()) {
        SplitMix64 stream = rng.split();
        for (double& v : t->v) v = stream.uniform(-0.1, 0.1);
    }
    return p;
}

void ModelParams::check_finite() const {
    for (const auto& [name, t] : named_tensors())
        for (double v : t->v)
            if (!std::isfinite(v)) throw NumericError("non-finite parameter in tensor " + name);
}

// ---------------------------------------------------------------------------
// Plain (no-tape) evaluation, shared by scoring and decoding
// ---------------------------------------------------------------------------

namespace {

struct EncoderOut {
    std::vector<Vec> enc;       // n vectors of size 2*dh
    std::vector<Vec> asrc;      // trans_wsrc * enc_i
    std::vector<Vec> adst;      // trans_wdst * enc_i
};

Vec embed(const ModelParams& p, int char_id) {
    int de = p.config.embedding_dim;
    Vec e(de);
    const double* row = &p.char_emb.v[static_cast<std::size_t>(char_id) * de];
    std::copy(row, row + de, e.begin());
    return e;
}

Vec slot_vector(const ModelParams& p, const std::vector<int>& feature_ids) {
    Vec s(p.config.embedding_dim, 0.0);
    for (int f : feature_ids)
        for (int i = 0; i < p.feat_proj.rows; ++i) s[i] += p.feat_proj.at(i, f);
    return s;
}

EncoderOut run_encoder(const ModelParams& p, const std::vector<int>& lemma_ids) {
    int n = static_cast<int>(lemma_ids.size());
    int dh = p.config.hidden_dim;
    std::vector<Vec> fwd(n), bwd(n);
    Vec h(dh, 0.0), tmp;
    for (int i = 0; i < n; ++i) {
        Vec x = embed(p, lemma_ids[i]);
        matvec_into(p.enc_fwd_wx, x, fwd[i]);
        matvec_into(p.enc_fwd_wh, h, tmp);
        add_into(fwd[i], tmp);
        add_into(fwd[i], p.enc_fwd_b.v);
        tanh_inplace(fwd[i]);
        h = fwd[i];
    }
    h.assign(dh, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        Vec x = embed(p, lemma_ids[i]);
        matvec_into(p.enc_bwd_wx, x, bwd[i]);
        matvec_into(p.enc_bwd_wh, h, tmp);
        add_into(bwd[i], tmp);
        add_into(bwd[i], p.enc_bwd_b.v);
        tanh_inplace(bwd[i]);
        h = bwd[i];
    }
    EncoderOut out;
    out.enc.resize(n);
    out.asrc.resize(n);
    out.adst.resize(n);
    for (int i = 0; i < n; ++i) {
        out.enc[i] = fwd[i];
        out.enc[i].insert(out.enc[i].end(), bwd[i].begin(), bwd[i].end());
        matvec_into(p.trans_wsrc, out.enc[i], out.asrc[i]);
        matvec_into(p.trans_wdst, out.enc[i], out.adst[i]);
    }
    return out;
}

Vec decoder_init(const ModelParams& p, const Vec& slot_vec) {
    Vec h;
    matvec_into(p.dec_init_w, slot_vec, h);
    add_into(h, p.dec_init_b.v);
    tanh_inplace(h);
    return h;
}

Vec decoder_step(const ModelParams& p, const Vec& h_prev, int char_id) {
    Vec x = embed(p, char_id);
    Vec h, tmp;
    matvec_into(p.dec_wx, x, h);
    matvec_into(p.dec_wh, h_prev, tmp);
    add_into(h, tmp);
    add_into(h, p.dec_b.v);
    tanh_inplace(h);
    return h;
}

// Emission log-probabilities over the vocabulary; BOS and PAD are masked.
Vec emit_logprobs(const ModelParams& p, const Vec& dec_h, const Vec& enc_i, const Vec& slot_vec) {
    Vec m, tmp;
    matvec_into(p.emit_wh, dec_h, m);
    matvec_into(p.emit_we, enc_i, tmp);
    add_into(m, tmp);
    matvec_into(p.emit_ws, slot_vec, tmp);
    add_into(m, tmp);
    add_into(m, p.emit_b.v);
    tanh_inplace(m);
    Vec logits;
    matvec_into(p.emit_out_w, m, logits);
    add_into(logits, p.emit_out_b.v);
    logits[Vocabulary::kPad] = kMaskValue;
    logits[Vocabulary::kBos] = kMaskValue;
    log_softmax_inplace(logits);
    return logits;
}

// Transition log-probabilities for one decoder step: row i' holds the
// distribution over destinations i >= i'. Entries below the diagonal stay
// -inf (the monotonicity invariant).
std::vector<Vec> transition_logprobs(const ModelParams& p, const EncoderOut& eo, const Vec& dec_h) {
    int n = static_cast<int>(eo.enc.size());
    int dm = p.trans_b.rows;
    Vec c;
    matvec_into(p.trans_wdec, dec_h, c);
    add_into(c, p.trans_b.v);
    std::vector<Vec> t(n, Vec(n, kNegInf));
    Vec fused(dm);
    for (int src = 0; src < n; ++src) {
        Vec scores(n - src);
        for (int dst = src; dst < n; ++dst) {
            double s = 0.0;
            for (int k = 0; k < dm; ++k) {
                double f = std::tanh(eo.asrc[src][k] + eo.adst[dst][k] + c[k]);
                s += p.trans_v.v[k] * f;
            }
            scores[dst - src] = s;
        }
        log_softmax_inplace(scores);
        for (int dst = src; dst < n; ++dst) t[src][dst] = scores[dst - src];
    }
    return t;
}

} // namespace

AlignmentLattice forward_lattice(const ModelParams& params, const EncodedExample& ex) {
    int n = static_cast<int>(ex.lemma_ids.size());
    int m = static_cast<int>(ex.target_ids.size());   // includes final EOS
    EncoderOut eo = run_encoder(params, ex.lemma_ids);
    Vec slot_vec = slot_vector(params, ex.feature_ids);

    AlignmentLattice lat;
    lat.source_len = n;
    lat.target_len = m - 1;
    lat.alpha.assign(m, Vec(n, kNegInf));

    Vec prev(n, kNegInf);
    prev[0] = 0.0;     // alignment starts on the BOS position
    Vec dec_h = decoder_init(params, slot_vec);
    Vec terms(n);
    for (int j = 0; j < m; ++j) {
        dec_h = decoder_step(params, dec_h, j == 0 ? Vocabulary::kBos : ex.target_ids[j - 1]);
        auto trans = transition_logprobs(params, eo, dec_h);
        Vec& cur = lat.alpha[j];
        for (int i = 0; i < n; ++i) {
            int cnt = 0;
            for (int src = 0; src <= i; ++src) {
                if (prev[src] == kNegInf) continue;
                terms[cnt++] = prev[src] + trans[src][i];
            }
            if (cnt == 0) continue;
            double moved = logsumexp(terms.data(), cnt);
            Vec elp = emit_logprobs(params, dec_h, eo.enc[i], slot_vec);
            cur[i] = moved + elp[ex.target_ids[j]];
        }
        prev = cur;
    }
    lat.log_prob = logsumexp(lat.alpha[m - 1].data(), n);
    if (std::isnan(lat.log_prob)) throw NumericError("forward lattice produced NaN");
    // Exact DP over normalized factors; tiny positive drift is rounding.
    lat.log_prob = std::min(lat.log_prob, 0.0);
    return lat;
}

double forward_logprob(const ModelParams& params, const std::string& lemma, const MergedSlot& slot,
                       const std::string& target) {
    EncodedExample ex = encode_example(params.vocab, lemma, slot, target);
    return forward_lattice(params, ex).log_prob;
}

// ---------------------------------------------------------------------------
// Tape construction for training
// ---------------------------------------------------------------------------

namespace {

struct ParamVars {
    std::vector<ad::Tape::Var> vars;          // named_tensors() order
    ad::Tape::Var mask;                       // emission mask (constant)

    ad::Tape::Var operator[](int i) const { return vars[i]; }
};

// Indices into named_tensors() order; kept in sync with ModelParams.
enum ParamIndex {
    kCharEmb, kFeatProj,
    kEncFwdWx, kEncFwdWh, kEncFwdB,
    kEncBwdWx, kEncBwdWh, kEncBwdB,
    kDecWx, kDecWh, kDecB,
    kDecInitW, kDecInitB,
    kEmitWh, kEmitWe, kEmitWs, kEmitB, kEmitOutW, kEmitOutB,
    kTransWsrc, kTransWdst, kTransWdec, kTransB, kTransV,
};

ParamVars make_param_vars(ad::Tape& tape, const ModelParams& p) {
    ParamVars pv;
    for (const auto& [name, t] : p.named_tensors()) pv.vars.push_back(tape.leaf(*t, true));
    ad::Tensor mask(p.vocab.size(), 1);
    mask.v[Vocabulary::kPad] = kMaskValue;
    mask.v[Vocabulary::kBos] = kMaskValue;
    pv.mask = tape.leaf(mask, false);
    return pv;
}

using Var = ad::Tape::Var;

// Builds log p(target | lemma, slot) on the tape. Mirrors forward_lattice;
// a unit test pins the two routes together.
Var build_logprob(ad::Tape& tape, const ParamVars& pv, const ModelParams& p, const EncodedExample& ex) {
    int n = static_cast<int>(ex.lemma_ids.size());
    int m = static_cast<int>(ex.target_ids.size());
    int dh = p.config.hidden_dim;

    // Slot vector: sum of feat_proj columns. Expressed as matvec with a
    // constant multi-hot vector so the projection gets gradient.
    ad::Tensor multihot(p.feat_proj.cols, 1);
    for (int f : ex.feature_ids) multihot.v[f] += 1.0;
    Var slot_vec = tape.matvec(pv[kFeatProj], tape.leaf(multihot, false));

    // Encoder.
    std::vector<Var> emb(n);
    for (int i = 0; i < n; ++i) emb[i] = tape.row(pv[kCharEmb], ex.lemma_ids[i]);
    ad::Tensor zeros(dh, 1);
    Var zero_h = tape.leaf(zeros, false);
    std::vector<Var> fwd(n), bwd(n);
    Var h = zero_h;
    for (int i = 0; i < n; ++i) {
        Var pre = tape.add(tape.add(tape.matvec(pv[kEncFwdWx], emb[i]), tape.matvec(pv[kEncFwdWh], h)),
                           pv[kEncFwdB]);
        fwd[i] = tape.tanh(pre);
        h = fwd[i];
    }
    h = zero_h;
    for (int i = n - 1; i >= 0; --i) {
        Var pre = tape.add(tape.add(tape.matvec(pv[kEncBwdWx], emb[i]), tape.matvec(pv[kEncBwdWh], h)),
                           pv[kEncBwdB]);
        bwd[i] = tape.tanh(pre);
        h = bwd[i];
    }
    std::vector<Var> enc(n), asrc(n), adst(n);
    for (int i = 0; i < n; ++i) {
        // Stack fwd and bwd into one vector node.
        std::vector<Var> parts;
        int fn = static_cast<int>(tape.value(fwd[i]).size());   // pick() may reallocate the tape,
        int bn = static_cast<int>(tape.value(bwd[i]).size());   // so take sizes by value first
        parts.reserve(fn + bn);
        for (int k = 0; k < fn; ++k) parts.push_back(tape.pick(fwd[i], k));
        for (int k = 0; k < bn; ++k) parts.push_back(tape.pick(bwd[i], k));
        enc[i] = tape.stack(parts);
        asrc[i] = tape.matvec(pv[kTransWsrc], enc[i]);
        adst[i] = tape.matvec(pv[kTransWdst], enc[i]);
    }

    // Decoder states for steps 0..m-1 (state used for the j-th emission).
    std::vector<Var> dec(m);
    Var dh_prev = tape.tanh(tape.add(tape.matvec(pv[kDecInitW], slot_vec), pv[kDecInitB]));
    for (int j = 0; j < m; ++j) {
        int prev_char = j == 0 ? Vocabulary::kBos : ex.target_ids[j - 1];
        Var x = tape.row(pv[kCharEmb], prev_char);
        dec[j] = tape.tanh(tape.add(tape.add(tape.matvec(pv[kDecWx], x), tape.matvec(pv[kDecWh], dh_prev)),
                                    pv[kDecB]));
        dh_prev = dec[j];
    }

    // Lattice.
    std::vector<Var> prev_alpha;   // scalars; empty slots denoted by -1
    std::vector<Var> cur_alpha(n, -1);
    for (int j = 0; j < m; ++j) {
        Var cj = tape.add(tape.matvec(pv[kTransWdec], dec[j]), pv[kTransB]);
        // Transition log-probs for this step.
        std::vector<std::vector<Var>> trans(n);
        int max_src = j == 0 ? 0 : n - 1;      // step 0 leaves only from BOS
        for (int src = 0; src <= max_src; ++src) {
            if (j > 0 && prev_alpha[src] < 0) continue;
            std::vector<Var> scores;
            scores.reserve(n - src);
            for (int dst = src; dst < n; ++dst) {
                Var fused = tape.tanh(tape.add(tape.add(asrc[src], adst[dst]), cj));
                scores.push_back(tape.pick(tape.matvec(pv[kTransV], fused), 0));
            }
            Var dist = tape.log_softmax(tape.stack(scores));
            trans[src].resize(n, -1);
            for (int dst = src; dst < n; ++dst) trans[src][dst] = tape.pick(dist, dst - src);
        }
        // Emission log-probs per position, for the observed target char.
        for (int i = 0; i < n; ++i) {
            std::vector<Var> terms;
            if (j == 0) {
                terms.push_back(trans[0][i]);
            } else {
                for (int src = 0; src <= i; ++src) {
                    if (prev_alpha[src] < 0 || trans[src].empty()) continue;
                    terms.push_back(tape.scalar_add(prev_alpha[src], trans[src][i]));
                }
            }
            if (terms.empty()) {
                cur_alpha[i] = -1;
                continue;
            }
            Var moved = terms.size() == 1 ? terms[0] : tape.logsumexp(terms);
            Var fusion = tape.tanh(tape.add(
                tape.add(tape.matvec(pv[kEmitWh], dec[j]), tape.matvec(pv[kEmitWe], enc[i])),
                tape.add(tape.matvec(pv[kEmitWs], slot_vec), pv[kEmitB])));
            Var logits = tape.add(tape.add(tape.matvec(pv[kEmitOutW], fusion), pv[kEmitOutB]), pv.mask);
            Var elp = tape.pick(tape.log_softmax(logits), ex.target_ids[j]);
            cur_alpha[i] = tape.scalar_add(moved, elp);
        }
        prev_alpha = cur_alpha;
    }
    std::vector<Var> finals;
    for (int i = 0; i < n; ++i)
        if (cur_alpha[i] >= 0) finals.push_back(cur_alpha[i]);
    return finals.size() == 1 ? finals[0] : tape.logsumexp(finals);
}

LossAndGradient loss_and_gradient_encoded(const ModelParams& params, const std::vector<EncodedExample>& batch) {
    if (batch.empty()) throw InputError("empty batch");
    ad::Tape tape;
    ParamVars pv = make_param_vars(tape, params);
    std::vector<Var> logps;
    logps.reserve(batch.size());
    for (const auto& ex : batch) logps.push_back(build_logprob(tape, pv, params, ex));
    Var loss = tape.scaled_sum(logps, -1.0 / static_cast<double>(batch.size()));
    tape.backward(loss);

    LossAndGradient out;
    out.loss = tape.scalar(loss);
    if (!std::isfinite(out.loss)) throw NumericError("training loss is not finite");
    for (Var v : pv.vars) out.gradients.push_back(tape.grad(v));
    return out;
}

} // namespace

LossAndGradient loss_and_gradient(const ModelParams& params, const std::vector<InflectionExample>& batch) {
    std::vector<EncodedExample> encoded;
    encoded.reserve(batch.size());
    for (const auto& ex : batch) encoded.push_back(encode_example(params.vocab, ex.lemma, ex.slot, ex.target));
    return loss_and_gradient_encoded(params, encoded);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

ModelParams train(const std::vector<InflectionExample>& train_set, const std::vector<InflectionExample>& dev_set,
                  const TrainConfig& config, TrainStats* stats) {
    if (train_set.empty() || dev_set.empty()) throw InputError("train and dev sets must be non-empty");
    config.validate();

    std::vector<InflectionExample> all = train_set;
    all.insert(all.end(), dev_set.begin(), dev_set.end());
    Vocabulary vocab = Vocabulary::build(all);
    ModelParams params = ModelParams::init(vocab, config);

    int dropped = 0;
    std::vector<EncodedExample> train_enc, dev_enc;
    for (const auto& ex : train_set) {
        train_enc.push_back(encode_example(vocab, ex.lemma, ex.slot, ex.target));
        dropped += train_enc.back().dropped_features;
    }
    for (const auto& ex : dev_set) {
        dev_enc.push_back(encode_example(vocab, ex.lemma, ex.slot, ex.target));
        dropped += dev_enc.back().dropped_features;
    }

    auto dev_mean_loglik = [&](const ModelParams& p) {
        double sum = 0.0;
        for (const auto& ex : dev_enc) sum += forward_lattice(p, ex).log_prob;
        return sum / static_cast<double>(dev_enc.size());
    };

    // Adam state, in named_tensors() order.
    auto tensors = params.named_tensors();
    std::vector<ad::Tensor> adam_m, adam_v;
    for (auto& [name, t] : tensors) {
        adam_m.emplace_back(t->rows, t->cols);
        adam_v.emplace_back(t->rows, t->cols);
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    ModelParams best = params;
    double best_dev = dev_mean_loglik(params);
    int best_epoch = -1;
    int since_best = 0;

    SplitMix64 shuffle_rng(config.seed ^ 0x5b5ad4f1e03dd1c5ULL);
    std::vector<std::size_t> order(train_enc.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::vector<EncodedExample> batch;
            for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
                batch.push_back(train_enc[order[i]]);
            LossAndGradient lg = loss_and_gradient_encoded(params, batch);

            double norm_sq = 0.0;
            for (const auto& g : lg.gradients)
                for (double v : g.v) norm_sq += v * v;
            double scale = 1.0;
            double norm = std::sqrt(norm_sq);
            if (norm > config.grad_clip) scale = config.grad_clip / norm;

            ++step;
            double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            auto ts = params.named_tensors();
            for (std::size_t k = 0; k < ts.size(); ++k) {
                ad::Tensor& t = *ts[k].second;
                const ad::Tensor& g = lg.gradients[k];
                for (std::size_t idx = 0; idx < t.size(); ++idx) {
                    double gv = g.v[idx] * scale;
                    adam_m[k].v[idx] = beta1 * adam_m[k].v[idx] + (1.0 - beta1) * gv;
                    adam_v[k].v[idx] = beta2 * adam_v[k].v[idx] + (1.0 - beta2) * gv * gv;
                    double mhat = adam_m[k].v[idx] / bc1;
                    double vhat = adam_v[k].v[idx] / bc2;
                    t.v[idx] -= config.learning_rate * mhat / (std::sqrt(vhat) + adam_eps);
                }
            }
        }
        double dev_ll = dev_mean_loglik(params);
        if (!std::isfinite(dev_ll)) throw NumericError("training diverged: dev log-likelihood not finite");
        if (dev_ll > best_dev) {
            best_dev = dev_ll;
            best = params;
            best_epoch = epoch;
            since_best = 0;
        } else if (++since_best > config.patience) {
            if (stats) stats->epochs_run = epoch + 1;
            break;
        }
        if (stats) stats->epochs_run = epoch + 1;
    }
    if (stats) {
        stats->best_epoch = best_epoch;
        stats->best_dev_loglik = best_dev;
        stats->dropped_features = dropped;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Decoding
// ---------------------------------------------------------------------------

DecodeResult decode(const ModelParams& params, const std::string& lemma, const MergedSlot& slot, int beam_width) {
    if (beam_width < 1) throw ConfigError("beam width must be >= 1");
    if (lemma.empty()) throw InputError("empty lemma");

    EncodedExample probe;
    probe.lemma_ids.push_back(Vocabulary::kBos);
    for (auto& c : utf8_chars(lemma)) probe.lemma_ids.push_back(params.vocab.char_id(c));
    probe.lemma_ids.push_back(Vocabulary::kEos);
    for (const auto& f : slot.features) {
        int id = params.vocab.feature_index.lookup(f);
        if (id >= 0) probe.feature_ids.push_back(id);
    }

    int n = static_cast<int>(probe.lemma_ids.size());
    std::size_t length_cap = 2 * utf8_chars(lemma).size() + 10;
    EncoderOut eo = run_encoder(params, probe.lemma_ids);
    Vec slot_vec = slot_vector(params, probe.feature_ids);

    struct Hypothesis {
        std::vector<int> chars;
        Vec dec_h;            // state used for the last emission
        int last_char;        // input for the next decoder step
        Vec alpha;            // exact forward column
        double score;         // exact prefix log-probability
    };

    Hypothesis root;
    root.dec_h = decoder_init(params, slot_vec);
    root.last_char = Vocabulary::kBos;
    root.alpha.assign(n, kNegInf);
    root.alpha[0] = 0.0;
    root.score = 0.0;

    std::vector<Hypothesis> beam{root};
    DecodeResult best;
    best.log_prob = kNegInf;

    Vec terms(n);
    for (std::size_t len = 0; len <= length_cap; ++len) {
        struct Candidate {
            std::size_t hyp;
            int ch;
            double score;
            Vec alpha;
            Vec dec_h;
        };
        std::vector<Candidate> cands;
        for (std::size_t hi = 0; hi < beam.size(); ++hi) {
            Hypothesis& hyp = beam[hi];
            Vec dec_h = decoder_step(params, hyp.dec_h, hyp.last_char);
            auto trans = transition_logprobs(params, eo, dec_h);
            Vec moved(n, kNegInf);
            for (int i = 0; i < n; ++i) {
                int cnt = 0;
                for (int src = 0; src <= i; ++src) {
                    if (hyp.alpha[src] == kNegInf) continue;
                    terms[cnt++] = hyp.alpha[src] + trans[src][i];
                }
                if (cnt > 0) moved[i] = logsumexp(terms.data(), cnt);
            }
            std::vector<Vec> elp(n);
            for (int i = 0; i < n; ++i) elp[i] = emit_logprobs(params, dec_h, eo.enc[i], slot_vec);

            for (int c = 0; c < params.vocab.size(); ++c) {
                if (c == Vocabulary::kPad || c == Vocabulary::kBos || c == Vocabulary::kUnk) continue;
                Vec alpha(n, kNegInf);
                for (int i = 0; i < n; ++i)
                    if (moved[i] != kNegInf) alpha[i] = moved[i] + elp[i][c];
                double score = logsumexp(alpha.data(), n);
                if (score == kNegInf) continue;
                if (c == Vocabulary::kEos) {
                    if (score > best.log_prob) {
                        best.log_prob = score;
                        best.ok = true;
                        best.output.clear();
                        for (int id : hyp.chars) best.output += params.vocab.chars[id];
                    }
                } else {
                    cands.push_back({hi, c, score, std::move(alpha), dec_h});
                }
            }
        }
        if (cands.empty()) break;
        std::stable_sort(cands.begin(), cands.end(),
                         [](const Candidate& a, const Candidate& b) { return a.score > b.score; });
        // Extending a prefix can only lose mass, so once the best finished
        // string outscores every live prefix the search is done.
        if (best.ok && best.log_prob >= cands.front().score) break;
        std::vector<Hypothesis> next;
        for (std::size_t k = 0; k < cands.size() && k < static_cast<std::size_t>(beam_width); ++k) {
            Candidate& c = cands[k];
            Hypothesis h;
            h.chars = beam[c.hyp].chars;
            h.chars.push_back(c.ch);
            h.dec_h = std::move(c.dec_h);
            h.last_char = c.ch;
            h.alpha = std::move(c.alpha);
            h.score = c.score;
            next.push_back(std::move(h));
        }
        beam = std::move(next);
    }
    if (!best.ok) {
        best.output.clear();
        best.log_prob = kNegInf;
    }
    return best;
}

double accuracy(const ModelParams& params, const std::vector<InflectionExample>& test_set, int beam_width) {
    if (test_set.empty()) throw InputError("empty test set");
    params.check_finite();
    std::size_t correct = 0;
    for (const auto& ex : test_set) {
        DecodeResult r = decode(params, ex.lemma, ex.slot, beam_width);
        if (r.ok && r.output == ex.target) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

std::uint64_t dataset_hash(const std::vector<InflectionExample>& examples) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& ex : examples) h = fnv1a(ex.lemma + "\t" + ex.slot.str() + "\t" + ex.target + "\n", h);
    return h;
}

std::string save_checkpoint(const ModelParams& params, std::uint64_t train_hash, std::uint64_t dev_hash) {
    nlohmann::ordered_json j;
    j["format"] = "wugscope-checkpoint";
    j["version"] = 1;
    j["vocab"]["chars"] = params.vocab.chars;
    j["vocab"]["features"] = params.vocab.feature_index.features;
    j["config"] = {
        {"embedding_dim", params.config.embedding_dim},
        {"hidden_dim", params.config.hidden_dim},
        {"learning_rate", params.config.learning_rate},
        {"batch_size", params.config.batch_size},
        {"max_epochs", params.config.max_epochs},
        {"patience", params.config.patience},
        {"grad_clip", params.config.grad_clip},
        {"seed", params.config.seed},
    };
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(train_hash));
    j["data_hashes"]["train"] = hex;
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(dev_hash));
    j["data_hashes"]["dev"] = hex;
    j["tensors"] = nlohmann::ordered_json::array();
    for (const auto& [name, t] : params.named_tensors()) {
        nlohmann::ordered_json tj;
        tj["name"] = name;
        tj["rows"] = t->rows;
        tj["cols"] = t->cols;
        tj["data"] = t->v;
        j["tensors"].push_back(std::move(tj));
    }
    return j.dump();
}

ModelParams load_checkpoint(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    if (j.at("format") != "wugscope-checkpoint" || j.at("version") != 1)
        throw InputError("unrecognized checkpoint format");
    Vocabulary vocab;
    vocab.chars = j.at("vocab").at("chars").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < vocab.chars.size(); ++i) vocab.char_index[vocab.chars[i]] = static_cast<int>(i);
    auto feats = j.at("vocab").at("features").get<std::vector<std::string>>();
    vocab.feature_index = FeatureInventory::build({feats.begin(), feats.end()});

    TrainConfig config;
    const auto& cj = j.at("config");
    config.embedding_dim = cj.at("embedding_dim");
    config.hidden_dim = cj.at("hidden_dim");
    config.learning_rate = cj.at("learning_rate");
    config.batch_size = cj.at("batch_size");
    config.max_epochs = cj.at("max_epochs");
    config.patience = cj.at("patience");
    config.grad_clip = cj.at("grad_clip");
    config.seed = cj.at("seed");

    ModelParams params = ModelParams::init(vocab, config);
    auto tensors = params.named_tensors();
    const auto& tj = j.at("tensors");
    if (tj.size() != tensors.size()) throw InputError("checkpoint tensor count mismatch");
    for (std::size_t k = 0; k < tensors.size(); ++k) {
        const auto& entry = tj[k];
        auto& [name, t] = tensors[k];
        if (entry.at("name") != name) throw InputError("checkpoint tensor order mismatch at " + name);
        int rows = entry.at("rows"), cols = entry.at("cols");
        if (rows != t->rows || cols != t->cols) throw InputError("checkpoint shape mismatch for " + name);
        t->v = entry.at("data").get<std::vector<double>>();
    }
    params.check_finite();
    return params;
}

} // namespace wug

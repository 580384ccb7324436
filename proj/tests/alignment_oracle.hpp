#ifndef WUG_TESTS_ALIGNMENT_ORACLE_HPP
#define WUG_TESTS_ALIGNMENT_ORACLE_HPP

// Naive reimplementation of the transducer used as an independent oracle:
// plain loops, linear-space softmaxes, explicit alignment-path enumeration.
// Deliberately shares no code with the production forward lattice.

#include "wug/transducer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace wug::testutil {

using DVec = std::vector<double>;

inline DVec mat_vec(const ad::Tensor& w, const DVec& x) {
    DVec y(w.rows, 0.0);
    for (int i = 0; i < w.rows; ++i)
        for (int j = 0; j < w.cols; ++j) y[i] += w.at(i, j) * x[j];
    return y;
}

inline DVec vadd(DVec a, const DVec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline DVec vtanh(DVec a) {
    for (double& x : a) x = std::tanh(x);
    return a;
}

inline DVec softmax(DVec a) {
    double mx = *std::max_element(a.begin(), a.end());
    double z = 0.0;
    for (double x : a) z += std::exp(x - mx);
    for (double& x : a) x = std::exp(x - mx) / z;
    return a;
}

struct OracleNet {
    const ModelParams& p;
    std::vector<DVec> enc, asrc, adst;
    DVec slot_vec;

    OracleNet(const ModelParams& params, const EncodedExample& ex) : p(params) {
        int n = static_cast<int>(ex.lemma_ids.size());
        int dh = p.config.hidden_dim;
        std::vector<DVec> fwd(n), bwd(n);
        DVec h(dh, 0.0);
        for (int i = 0; i < n; ++i) {
            h = vtanh(vadd(vadd(mat_vec(p.enc_fwd_wx, embed(ex.lemma_ids[i])), mat_vec(p.enc_fwd_wh, h)),
                           p.enc_fwd_b.v));
            fwd[i] = h;
        }
        h.assign(dh, 0.0);
        for (int i = n - 1; i >= 0; --i) {
            h = vtanh(vadd(vadd(mat_vec(p.enc_bwd_wx, embed(ex.lemma_ids[i])), mat_vec(p.enc_bwd_wh, h)),
                           p.enc_bwd_b.v));
            bwd[i] = h;
        }
        for (int i = 0; i < n; ++i) {
            DVec e = fwd[i];
            e.insert(e.end(), bwd[i].begin(), bwd[i].end());
            enc.push_back(e);
            asrc.push_back(mat_vec(p.trans_wsrc, e));
            adst.push_back(mat_vec(p.trans_wdst, e));
        }
        slot_vec.assign(p.config.embedding_dim, 0.0);
        for (int f : ex.feature_ids)
            for (int i = 0; i < p.feat_proj.rows; ++i) slot_vec[i] += p.feat_proj.at(i, f);
    }

    DVec embed(int id) const {
        DVec e(p.config.embedding_dim);
        for (int k = 0; k < p.config.embedding_dim; ++k) e[k] = p.char_emb.at(id, k);
        return e;
    }

    DVec decoder_init() const { return vtanh(vadd(mat_vec(p.dec_init_w, slot_vec), p.dec_init_b.v)); }

    DVec decoder_step(const DVec& prev, int char_id) const {
        return vtanh(vadd(vadd(mat_vec(p.dec_wx, embed(char_id)), mat_vec(p.dec_wh, prev)), p.dec_b.v));
    }

    // Transition probabilities out of src for this decoder state.
    DVec transition(const DVec& dec_h, int src) const {
        int n = static_cast<int>(enc.size());
        DVec c = vadd(mat_vec(p.trans_wdec, dec_h), p.trans_b.v);
        DVec scores;
        for (int dst = src; dst < n; ++dst) {
            double s = 0.0;
            for (std::size_t k = 0; k < c.size(); ++k)
                s += p.trans_v.v[k] * std::tanh(asrc[src][k] + adst[dst][k] + c[k]);
            scores.push_back(s);
        }
        return softmax(scores);   // index dst - src
    }

    DVec emission(const DVec& dec_h, int pos) const {
        DVec m = vtanh(vadd(
            vadd(vadd(mat_vec(p.emit_wh, dec_h), mat_vec(p.emit_we, enc[pos])), mat_vec(p.emit_ws, slot_vec)),
            p.emit_b.v));
        DVec logits = vadd(mat_vec(p.emit_out_w, m), p.emit_out_b.v);
        logits[Vocabulary::kPad] = -1e30;
        logits[Vocabulary::kBos] = -1e30;
        return softmax(logits);
    }
};

// Sum over all monotone alignment paths by explicit enumeration.
inline double oracle_prob(const ModelParams& p, const EncodedExample& ex) {
    OracleNet net(p, ex);
    int n = static_cast<int>(ex.lemma_ids.size());
    int m = static_cast<int>(ex.target_ids.size());

    std::vector<DVec> dec(m);
    DVec h = net.decoder_init();
    for (int j = 0; j < m; ++j) {
        h = net.decoder_step(h, j == 0 ? Vocabulary::kBos : ex.target_ids[j - 1]);
        dec[j] = h;
    }

    std::function<double(int, int)> walk = [&](int j, int src) -> double {
        if (j == m) return 1.0;
        DVec trans = net.transition(dec[j], src);
        double total = 0.0;
        for (int dst = src; dst < n; ++dst) {
            double emit = net.emission(dec[j], dst)[ex.target_ids[j]];
            total += trans[dst - src] * emit * walk(j + 1, dst);
        }
        return total;
    };
    return walk(0, 0);
}

} // namespace wug::testutil

#endif

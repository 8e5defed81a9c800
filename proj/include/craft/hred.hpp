#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "craft/checkpoint.hpp"
#include "craft/config.hpp"
#include "craft/corpus.hpp"
#include "craft/gru.hpp"
#include "craft/tape.hpp"
#include "craft/vocab.hpp"

namespace craft {

// Hierarchical recurrent encoder-decoder plus the classifier head.
// Parameter names: embed, utt.*, ctx.*, dec.*, out.W/out.b, head.W1..b3.
// The decoder hidden size equals ctx_hidden (it is initialized from the
// context state, and dot-product attention needs matching dims).
template <typename Real>
struct HredModel {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 0;
    std::size_t utt_hidden = 0;
    std::size_t ctx_hidden = 0;
    std::size_t mlp_hidden = 0;
    Mode mode = Mode::craft;
    ParamStore<Real> params;

    std::size_t head_input_dim() const {
        return mode == Mode::craft_minus_ce ? utt_hidden : ctx_hidden;
    }

    static HredModel init(const RunConfig& cfg, std::size_t vocab_size) {
        HredModel m;
        m.vocab_size = vocab_size;
        m.embed_dim = cfg.embed_dim;
        m.utt_hidden = cfg.utt_hidden;
        m.ctx_hidden = cfg.ctx_hidden;
        m.mlp_hidden = cfg.mlp_hidden;
        m.mode = cfg.mode;
        std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
        Real er = Real(0.5) / Real(cfg.embed_dim);
        m.params.add("embed",
                     Mat<Real>::uniform(vocab_size, cfg.embed_dim, -er, er, rng));
        add_gru_params(m.params, "utt", cfg.embed_dim, cfg.utt_hidden, rng);
        add_gru_params(m.params, "ctx", cfg.utt_hidden, cfg.ctx_hidden, rng);
        add_gru_params(m.params, "dec", cfg.embed_dim, cfg.ctx_hidden, rng);
        m.params.add("out.W", Mat<Real>::uniform(vocab_size, 2 * cfg.ctx_hidden,
                                                 Real(-0.1), Real(0.1), rng));
        m.params.add("out.b", Mat<Real>::zeros(vocab_size, 1));
        std::size_t hin = m.head_input_dim();
        m.params.add("head.W1", Mat<Real>::uniform(cfg.mlp_hidden, hin, Real(-0.1), Real(0.1), rng));
        m.params.add("head.b1", Mat<Real>::zeros(cfg.mlp_hidden, 1));
        m.params.add("head.W2", Mat<Real>::uniform(cfg.mlp_hidden, cfg.mlp_hidden,
                                                   Real(-0.1), Real(0.1), rng));
        m.params.add("head.b2", Mat<Real>::zeros(cfg.mlp_hidden, 1));
        m.params.add("head.W3", Mat<Real>::uniform(1, cfg.mlp_hidden, Real(-0.1), Real(0.1), rng));
        m.params.add("head.b3", Mat<Real>::zeros(1, 1));
        return m;
    }
};

template <typename Real>
void save_model(const std::string& path, const HredModel<Real>& model,
                const RunConfig& cfg) {
    nlohmann::ordered_json echo = cfg.to_json();
    echo["vocab_size"] = model.vocab_size;
    save_checkpoint(path, model.params, echo.dump());
}

template <typename Real>
HredModel<Real> load_model(const std::string& path, RunConfig& cfg_out) {
    ParamStore<Real> params;
    std::string echo = load_checkpoint(path, params);
    nlohmann::json j = nlohmann::json::parse(echo);
    cfg_out = RunConfig::from_json(j);
    HredModel<Real> m;
    m.vocab_size = j.at("vocab_size").get<std::size_t>();
    m.embed_dim = cfg_out.embed_dim;
    m.utt_hidden = cfg_out.utt_hidden;
    m.ctx_hidden = cfg_out.ctx_hidden;
    m.mlp_hidden = cfg_out.mlp_hidden;
    m.mode = cfg_out.mode;
    m.params = std::move(params);
    return m;
}

// Hidden vectors accumulated while consuming a conversation comment by
// comment. Append-only: extending never modifies earlier entries.
template <typename Real>
struct ContextState {
    std::vector<typename Tape<Real>::Id> enc;  // h^enc per comment
    std::vector<typename Tape<Real>::Id> con;  // h^con per comment

    std::size_t n() const { return con.size(); }
};

// h^enc over the token sequence, starting from the zero state.
template <typename Real>
typename Tape<Real>::Id encode_utterance(Tape<Real>& tape, HredModel<Real>& model,
                                         const TokenSeq& tokens) {
    if (tokens.empty()) fail(ErrorKind::data_validation, "empty token sequence");
    auto embed = tape.param(model.params, "embed");
    auto h = tape.leaf(Mat<Real>::zeros(model.utt_hidden, 1));
    for (std::size_t tok : tokens) {
        auto x = tape.embed_row(embed, tok);
        h = gru_cell(tape, model.params, "utt", x, h);
    }
    return h;
}

// Appends h^con_{n+1} = f(h^con_n, utt); h^con_0 = 0.
template <typename Real>
void extend_context(Tape<Real>& tape, HredModel<Real>& model, ContextState<Real>& state,
                    typename Tape<Real>::Id utt) {
    auto h_prev = state.con.empty() ? tape.leaf(Mat<Real>::zeros(model.ctx_hidden, 1))
                                    : state.con.back();
    state.enc.push_back(utt);
    state.con.push_back(gru_cell(tape, model.params, "ctx", utt, h_prev));
}

template <typename Real>
struct DecodeResult {
    typename Tape<Real>::Id loss;                 // mean per-token NLL
    std::vector<std::vector<Real>> attention;     // weights per decoding step
};

// Teacher-forced decoding of the reply given the current context. The
// decoder starts from h^con_n and attends over h^con_1..h^con_n at every
// step; the attention context is concatenated with the decoder state
// before the output projection.
template <typename Real>
DecodeResult<Real> decode_nll(Tape<Real>& tape, HredModel<Real>& model,
                              const ContextState<Real>& state, const TokenSeq& reply) {
    if (state.con.empty()) fail(ErrorKind::data_validation, "decode_nll on empty context");
    if (reply.empty()) fail(ErrorKind::data_validation, "decode_nll on empty reply");
    auto embed = tape.param(model.params, "embed");
    auto w_out = tape.param(model.params, "out.W");
    auto b_out = tape.param(model.params, "out.b");

    DecodeResult<Real> res;
    auto h_dec = state.con.back();
    std::size_t prev = Vocabulary::SOS;
    std::vector<typename Tape<Real>::Id> losses;
    for (std::size_t target : reply) {
        auto x = tape.embed_row(embed, prev);
        h_dec = gru_cell(tape, model.params, "dec", x, h_dec);
        auto attn = tape.dot_attention(h_dec, state.con);
        res.attention.push_back(attn.weights);
        auto logits = tape.affine(w_out, tape.concat(attn.context, h_dec), b_out);
        losses.push_back(tape.softmax_xent(logits, target));
        prev = target;
    }
    res.loss = tape.mean_scalars(losses);
    return res;
}

// Greedy argmax generation; debug utility only.
template <typename Real>
TokenSeq greedy_reply(Tape<Real>& tape, HredModel<Real>& model,
                      const ContextState<Real>& state, std::size_t max_len = 20) {
    auto embed = tape.param(model.params, "embed");
    auto w_out = tape.param(model.params, "out.W");
    auto b_out = tape.param(model.params, "out.b");
    auto h_dec = state.con.back();
    std::size_t prev = Vocabulary::SOS;
    TokenSeq out;
    for (std::size_t t = 0; t < max_len; ++t) {
        auto x = tape.embed_row(embed, prev);
        h_dec = gru_cell(tape, model.params, "dec", x, h_dec);
        auto attn = tape.dot_attention(h_dec, state.con);
        auto logits = tape.affine(w_out, tape.concat(attn.context, h_dec), b_out);
        const auto& lv = tape.val(logits);
        std::size_t best = 0;
        for (std::size_t i = 1; i < lv.size(); ++i)
            if (lv.data[i] > lv.data[best]) best = i;
        out.push_back(best);
        if (best == Vocabulary::EOS) break;
        prev = best;
    }
    return out;
}

// Mean per-token NLL of predicting every reply c_{n+1} from c_1..c_n,
// averaged over reply positions.
template <typename Real>
typename Tape<Real>::Id conversation_nll(Tape<Real>& tape, HredModel<Real>& model,
                                         const std::vector<TokenSeq>& comments) {
    ContextState<Real> state;
    std::vector<typename Tape<Real>::Id> losses;
    for (std::size_t n = 0; n + 1 < comments.size(); ++n) {
        extend_context(tape, model, state, encode_utterance(tape, model, comments[n]));
        losses.push_back(decode_nll(tape, model, state, comments[n + 1]).loss);
    }
    return tape.mean_scalars(losses);
}

template <typename Real>
std::vector<TokenSeq> encode_comments(const Conversation& conv, const Vocabulary& vocab,
                                      std::size_t max_tokens) {
    std::vector<TokenSeq> out;
    out.reserve(conv.comments.size());
    for (const auto& cm : conv.comments) out.push_back(encode(cm.text, vocab, max_tokens));
    return out;
}

// Unsupervised pre-training over all reply positions. Returns the
// per-epoch mean conversation NLL.
template <typename Real>
std::vector<double> pretrain(HredModel<Real>& model, const Corpus& corpus,
                             const Vocabulary& vocab, const RunConfig& cfg) {
    if (corpus.conversations.empty()) fail(ErrorKind::data_validation, "empty pre-training corpus");
    std::vector<std::vector<TokenSeq>> data;
    for (const auto& conv : corpus.conversations) {
        auto enc = encode_comments<Real>(conv, vocab, cfg.max_tokens_per_comment);
        if (enc.size() >= 2) data.push_back(std::move(enc));
    }
    if (data.empty()) fail(ErrorKind::data_validation, "no multi-comment conversations to pre-train on");

    std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed) ^ 0x9e3779b9u);
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> epoch_log;
    for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0;
        std::size_t done = 0;
        while (done < order.size()) {
            std::size_t batch = std::min(cfg.batch_size, order.size() - done);
            for (std::size_t b = 0; b < batch; ++b) {
                Tape<Real> tape;
                auto loss = conversation_nll(tape, model, data[order[done + b]]);
                double lv = static_cast<double>(tape.val(loss).data[0]);
                if (!std::isfinite(lv))
                    fail(ErrorKind::numeric,
                         "non-finite pre-training loss at epoch " + std::to_string(epoch) +
                             ", step " + std::to_string(done + b));
                epoch_loss += lv;
                tape.backward(loss, Real(1) / Real(batch));
            }
            adam_step(model.params, static_cast<Real>(cfg.lr), static_cast<Real>(cfg.clip));
            done += batch;
        }
        epoch_log.push_back(epoch_loss / double(data.size()));
    }
    return epoch_log;
}

}  // namespace craft

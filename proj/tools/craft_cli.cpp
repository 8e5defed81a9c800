// Command-line pipeline: corpus generation, pre-training, fine-tuning,
// forecasting, evaluation, and the order-sensitivity experiments. Every
// artifact gets a sidecar manifest (config echo, seed, input hashes).

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "craft/craft.hpp"

namespace {

constexpr const char* kToolVersion = "craft 0.1.0";

using Real = float;
using json = nlohmann::ordered_json;

craft::RunConfig build_config(const std::string& config_file,
                              const std::vector<std::string>& overrides,
                              std::optional<std::uint64_t> seed) {
    craft::RunConfig cfg;
    if (!config_file.empty()) cfg.apply_file(config_file);
    for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            craft::fail(craft::ErrorKind::config, "--set expects key=value, got: " + kv);
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
}

json base_manifest(const std::string& command, const craft::RunConfig& cfg) {
    json m;
    m["tool"] = kToolVersion;
    m["command"] = command;
    m["config"] = cfg.to_json();
    m["seed"] = cfg.seed;
    m["inputs"] = json::object();
    return m;
}

void add_input(json& manifest, const std::string& path) {
    manifest["inputs"][path] = craft::file_hash(path);
}

void write_json(const std::string& path, const json& j) {
    std::ofstream os(path);
    if (!os) craft::fail(craft::ErrorKind::missing_file, "cannot write: " + path);
    os << j.dump(2) << "\n";
}

std::string vocab_sidecar(const std::string& ckpt_path) { return ckpt_path + ".vocab"; }

struct LoadedModel {
    craft::HredModel<Real> model;
    craft::Vocabulary vocab;
    craft::RunConfig cfg;
};

LoadedModel load(const std::string& ckpt_path) {
    LoadedModel lm;
    lm.model = craft::load_model<Real>(ckpt_path, lm.cfg);
    lm.vocab = craft::Vocabulary::load(vocab_sidecar(ckpt_path));
    if (lm.vocab.size() != lm.model.vocab_size)
        craft::fail(craft::ErrorKind::data_validation,
                    "vocabulary size does not match checkpoint");
    return lm;
}

json metrics_with_curve(const craft::MetricsReport& metrics,
                        const std::vector<craft::ForecastTrace>& traces,
                        const std::vector<craft::Conversation>& gold) {
    json out;
    out["metrics"] = metrics.to_json();
    std::vector<std::pair<double, bool>> max_scores;
    for (std::size_t i = 0; i < traces.size(); ++i)
        max_scores.emplace_back(traces[i].max_score(),
                                gold[i].label == craft::Label::derail);
    auto curve = craft::pr_curve(max_scores);
    out["aupr"] = curve.aupr;
    return out;
}

void write_pr_csv(const std::string& path, const craft::PrCurve& curve) {
    std::ofstream os(path);
    os << "recall,precision\n";
    for (const auto& [r, p] : curve.points) os << r << "," << p << "\n";
}

void write_gap_csv(const std::string& path, const craft::WarningGapReport& gaps) {
    std::ofstream os(path);
    os << "comment_gap,time_gap_seconds\n";
    for (std::size_t i = 0; i < gaps.comment_gaps.size(); ++i)
        os << gaps.comment_gaps[i] << "," << gaps.time_gaps[i] << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"CRAFT conversational forecasting pipeline"};
    app.require_subcommand(1);

    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--config", config_file, "key=value config file")->capture_default_str();
    app.add_option("--set", overrides, "config override key=value (repeatable)");
    app.add_option("--seed", seed_flag, "seed override");

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    std::string gen_out;
    std::size_t gen_n = 100;
    bool gen_labeled = false, gen_unlabeled = false;
    gen->add_option("--out", gen_out)->required();
    gen->add_option("--n", gen_n)->required();
    gen->add_flag("--labeled", gen_labeled);
    gen->add_flag("--unlabeled", gen_unlabeled);

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "unsupervised pre-training");
    std::string pre_corpus, pre_out;
    pre->add_option("--corpus", pre_corpus)->required();
    pre->add_option("--out-ckpt", pre_out)->required();

    // finetune
    auto* fin = app.add_subcommand("finetune", "supervised fine-tuning + threshold");
    std::string fin_ckpt, fin_train, fin_dev, fin_out;
    fin->add_option("--ckpt", fin_ckpt, "pre-trained checkpoint (omit for no_pretrain)");
    fin->add_option("--train", fin_train)->required();
    fin->add_option("--dev", fin_dev)->required();
    fin->add_option("--out-ckpt", fin_out)->required();

    // forecast
    auto* fc = app.add_subcommand("forecast", "per-comment probabilities and decisions");
    std::string fc_ckpt, fc_input, fc_out, fc_kind = "labeled";
    std::optional<double> fc_threshold;
    fc->add_option("--ckpt", fc_ckpt)->required();
    fc->add_option("--input", fc_input)->required();
    fc->add_option("--threshold", fc_threshold, "defaults to the fine-tune manifest's value");
    fc->add_option("--kind", fc_kind)->check(CLI::IsMember({"labeled", "unlabeled"}));
    fc->add_option("--out", fc_out)->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "metrics, PR curve, warning gaps");
    std::string ev_traces, ev_ckpt, ev_test, ev_out;
    std::optional<double> ev_threshold;
    ev->add_option("--traces", ev_traces);
    ev->add_option("--ckpt", ev_ckpt);
    ev->add_option("--test", ev_test)->required();
    ev->add_option("--threshold", ev_threshold);
    ev->add_option("--out", ev_out, "output prefix")->required();

    // shuffle-experiment
    auto* sh = app.add_subcommand("shuffle-experiment", "order-sensitivity experiments");
    std::string sh_mode, sh_ckpt, sh_test, sh_out;
    std::string sh_unlabeled, sh_train, sh_dev;
    std::size_t sh_nshuffles = 10;
    std::optional<double> sh_threshold;
    sh->add_option("--mode", sh_mode)->required()->check(CLI::IsMember({"prefix", "full"}));
    sh->add_option("--ckpt", sh_ckpt);
    sh->add_option("--test", sh_test);
    sh->add_option("--unlabeled", sh_unlabeled);
    sh->add_option("--train", sh_train);
    sh->add_option("--dev", sh_dev);
    sh->add_option("--n-shuffles", sh_nshuffles);
    sh->add_option("--threshold", sh_threshold);
    sh->add_option("--out", sh_out)->required();

    CLI11_PARSE(app, argc, argv);
    craft::RunConfig cfg = build_config(config_file, overrides, seed_flag);

    if (*gen) {
        if (gen_labeled == gen_unlabeled)
            craft::fail(craft::ErrorKind::config, "pass exactly one of --labeled/--unlabeled");
        auto kind = gen_labeled ? craft::CorpusKind::labeled : craft::CorpusKind::unlabeled;
        craft::Corpus corpus = craft::generate_synthetic(gen_n, cfg.seed, kind);
        craft::save_jsonl(gen_out, corpus);
        json m = base_manifest("gen-corpus", cfg);
        m["n"] = gen_n;
        m["kind"] = gen_labeled ? "labeled" : "unlabeled";
        m["outputs"] = {gen_out};
        craft::write_manifest(gen_out, m);
        std::cout << "wrote " << corpus.conversations.size() << " conversations to "
                  << gen_out << "\n";
        return 0;
    }

    if (*pre) {
        craft::Corpus corpus =
            craft::load_jsonl(pre_corpus, craft::CorpusKind::unlabeled, cfg.max_comments);
        craft::Vocabulary vocab = craft::build_vocab(corpus, cfg.min_freq);
        auto model = craft::HredModel<Real>::init(cfg, vocab.size());
        auto log = craft::pretrain(model, corpus, vocab, cfg);
        craft::save_model(pre_out, model, cfg);
        vocab.save(vocab_sidecar(pre_out));
        json m = base_manifest("pretrain", cfg);
        add_input(m, pre_corpus);
        m["vocab_size"] = vocab.size();
        m["epoch_nll"] = log;
        m["outputs"] = {pre_out, vocab_sidecar(pre_out)};
        craft::write_manifest(pre_out, m);
        std::cout << "pretrain NLL: " << log.front() << " -> " << log.back() << "\n";
        return 0;
    }

    if (*fin) {
        craft::Corpus train =
            craft::load_jsonl(fin_train, craft::CorpusKind::labeled, cfg.max_comments);
        craft::Corpus dev =
            craft::load_jsonl(fin_dev, craft::CorpusKind::labeled, cfg.max_comments);
        craft::HredModel<Real> model;
        craft::Vocabulary vocab;
        if (!fin_ckpt.empty()) {
            LoadedModel lm = load(fin_ckpt);
            // training hyperparameters come from the current invocation;
            // architecture comes from the checkpoint
            cfg.embed_dim = lm.cfg.embed_dim;
            cfg.utt_hidden = lm.cfg.utt_hidden;
            cfg.ctx_hidden = lm.cfg.ctx_hidden;
            cfg.mlp_hidden = lm.cfg.mlp_hidden;
            model = std::move(lm.model);
            model.mode = cfg.mode;
            vocab = std::move(lm.vocab);
            if (cfg.mode == craft::Mode::no_pretrain)
                craft::fail(craft::ErrorKind::config,
                            "no_pretrain mode does not take a checkpoint");
        } else {
            if (cfg.mode != craft::Mode::no_pretrain)
                craft::fail(craft::ErrorKind::config,
                            "--ckpt required unless mode=no_pretrain");
            craft::Corpus vocab_src = train;
            vocab_src.kind = craft::CorpusKind::unlabeled;
            vocab = craft::build_vocab(vocab_src, cfg.min_freq);
            model = craft::HredModel<Real>::init(cfg, vocab.size());
        }
        auto log = craft::finetune(model, train, vocab, cfg);
        auto threshold = craft::tune_threshold(model, dev, vocab, cfg);
        craft::save_model(fin_out, model, cfg);
        vocab.save(vocab_sidecar(fin_out));
        json m = base_manifest("finetune", cfg);
        if (!fin_ckpt.empty()) add_input(m, fin_ckpt);
        add_input(m, fin_train);
        add_input(m, fin_dev);
        m["epoch_loss"] = log;
        m["threshold"] = threshold.threshold;
        m["threshold_dev_f1"] = threshold.f1;
        m["threshold_degenerate"] = threshold.degenerate;
        m["outputs"] = {fin_out, vocab_sidecar(fin_out)};
        craft::write_manifest(fin_out, m);
        if (threshold.degenerate)
            std::cerr << "warning: degenerate dev scores, threshold fixed at 0.5\n";
        std::cout << "tuned threshold: " << threshold.threshold << "\n";
        return 0;
    }

    if (*fc) {
        LoadedModel lm = load(fc_ckpt);
        double threshold;
        if (fc_threshold) {
            threshold = *fc_threshold;
        } else {
            nlohmann::json m = craft::read_manifest(fc_ckpt);
            if (!m.contains("threshold"))
                craft::fail(craft::ErrorKind::config,
                            "checkpoint manifest has no tuned threshold; pass --threshold");
            threshold = m["threshold"].get<double>();
        }
        auto kind = fc_kind == "labeled" ? craft::CorpusKind::labeled
                                         : craft::CorpusKind::unlabeled;
        craft::Corpus input = craft::load_jsonl(fc_input, kind, lm.cfg.max_comments);
        std::vector<craft::ForecastTrace> traces;
        for (const auto& conv : input.conversations)
            traces.push_back(craft::forecast(lm.model, conv, lm.vocab, lm.cfg, threshold));
        craft::save_traces(fc_out, traces);
        json m = base_manifest("forecast", lm.cfg);
        add_input(m, fc_ckpt);
        add_input(m, fc_input);
        m["threshold"] = threshold;
        m["corpus_hash"] = craft::file_hash(fc_input);
        m["outputs"] = {fc_out};
        craft::write_manifest(fc_out, m);
        std::cout << "wrote " << traces.size() << " traces to " << fc_out << "\n";
        return 0;
    }

    if (*ev) {
        craft::Corpus test =
            craft::load_jsonl(ev_test, craft::CorpusKind::labeled, cfg.max_comments);
        std::vector<craft::ForecastTrace> traces;
        json m = base_manifest("evaluate", cfg);
        if (!ev_traces.empty()) {
            nlohmann::json tm = craft::read_manifest(ev_traces);
            std::string expected = tm.value("corpus_hash", std::string());
            if (expected != craft::file_hash(ev_test))
                craft::fail(craft::ErrorKind::data_validation,
                            "trace file was produced from a different corpus than " + ev_test);
            traces = craft::load_traces(ev_traces);
            add_input(m, ev_traces);
        } else if (!ev_ckpt.empty()) {
            LoadedModel lm = load(ev_ckpt);
            double threshold = ev_threshold
                                   ? *ev_threshold
                                   : craft::read_manifest(ev_ckpt)["threshold"].get<double>();
            for (const auto& conv : test.conversations)
                traces.push_back(craft::forecast(lm.model, conv, lm.vocab, lm.cfg, threshold));
            add_input(m, ev_ckpt);
        } else {
            craft::fail(craft::ErrorKind::config, "evaluate needs --traces or --ckpt");
        }
        add_input(m, ev_test);
        if (traces.size() != test.conversations.size())
            craft::fail(craft::ErrorKind::data_validation,
                        "trace count does not match test corpus");
        std::map<std::string, const craft::ForecastTrace*> by_id;
        for (const auto& t : traces) by_id[t.conversation_id] = &t;
        std::vector<craft::Outcome> outcomes;
        std::vector<craft::ForecastTrace> ordered;
        for (const auto& conv : test.conversations) {
            auto it = by_id.find(conv.id);
            if (it == by_id.end())
                craft::fail(craft::ErrorKind::data_validation,
                            "no trace for conversation '" + conv.id + "'");
            ordered.push_back(*it->second);
            outcomes.push_back(craft::classify_outcome(*it->second, conv));
        }
        auto metrics = craft::compute_metrics(outcomes);
        std::vector<std::pair<double, bool>> max_scores;
        for (std::size_t i = 0; i < ordered.size(); ++i)
            max_scores.emplace_back(ordered[i].max_score(),
                                    test.conversations[i].label == craft::Label::derail);
        auto curve = craft::pr_curve(max_scores);
        auto gaps = craft::warning_gaps(ordered, test.conversations);

        json report;
        report["metrics"] = metrics.to_json();
        report["aupr"] = curve.aupr;
        report["warning_gaps"] = gaps.to_json();
        write_json(ev_out + ".metrics.json", report);
        write_pr_csv(ev_out + ".pr.csv", curve);
        write_gap_csv(ev_out + ".gaps.csv", gaps);
        m["outputs"] = {ev_out + ".metrics.json", ev_out + ".pr.csv", ev_out + ".gaps.csv"};
        craft::write_manifest(ev_out + ".metrics.json", m);
        std::cout << "accuracy " << metrics.accuracy << ", F1 " << metrics.f1 << ", AUPR "
                  << curve.aupr << "\n";
        return 0;
    }

    if (*sh) {
        json m = base_manifest("shuffle-experiment", cfg);
        m["mode"] = sh_mode;
        if (sh_mode == "prefix") {
            if (sh_ckpt.empty() || sh_test.empty())
                craft::fail(craft::ErrorKind::config, "prefix mode needs --ckpt and --test");
            LoadedModel lm = load(sh_ckpt);
            double threshold = sh_threshold
                                   ? *sh_threshold
                                   : craft::read_manifest(sh_ckpt)["threshold"].get<double>();
            craft::Corpus test =
                craft::load_jsonl(sh_test, craft::CorpusKind::labeled, lm.cfg.max_comments);
            std::vector<craft::ForecastTrace> traces;
            for (const auto& conv : test.conversations)
                traces.push_back(craft::forecast(lm.model, conv, lm.vocab, lm.cfg, threshold));
            auto scorer = craft::make_craft_scorer(lm.model, lm.vocab, lm.cfg);
            auto res = craft::prefix_shuffle_experiment(scorer, traces, test.conversations,
                                                        sh_nshuffles, cfg.seed);
            add_input(m, sh_ckpt);
            add_input(m, sh_test);
            m["n_shuffles"] = sh_nshuffles;
            m["eligible"] = res.eligible;
            m["flipped"] = res.flipped;
            m["flip_rate"] = res.flip_rate;
            write_json(sh_out, m);
            std::cout << "prefix-shuffle flip rate: " << res.flip_rate << " (" << res.flipped
                      << "/" << res.eligible << ")\n";
        } else {
            if (sh_unlabeled.empty() || sh_train.empty() || sh_dev.empty() || sh_test.empty())
                craft::fail(craft::ErrorKind::config,
                            "full mode needs --unlabeled --train --dev --test");
            craft::Corpus unlabeled =
                craft::load_jsonl(sh_unlabeled, craft::CorpusKind::unlabeled, cfg.max_comments);
            craft::Corpus train =
                craft::load_jsonl(sh_train, craft::CorpusKind::labeled, cfg.max_comments);
            craft::Corpus dev =
                craft::load_jsonl(sh_dev, craft::CorpusKind::labeled, cfg.max_comments);
            craft::Corpus test =
                craft::load_jsonl(sh_test, craft::CorpusKind::labeled, cfg.max_comments);
            auto res = craft::full_shuffle_experiment<Real>(unlabeled, train, dev, test, cfg,
                                                            cfg.seed);
            for (const auto& p : {sh_unlabeled, sh_train, sh_dev, sh_test}) add_input(m, p);
            m["craft"] = res.craft.to_json();
            m["shuffled_craft"] = res.shuffled_craft.to_json();
            m["craft_minus_ce"] = res.craft_minus_ce.to_json();
            m["bow_cumulative"] = res.bow_cumulative.to_json();
            m["shuffled_bow_cumulative"] = res.shuffled_bow_cumulative.to_json();
            write_json(sh_out, m);
            std::cout << "craft acc " << res.craft.accuracy << ", shuffled craft acc "
                      << res.shuffled_craft.accuracy << ", craft-ce acc "
                      << res.craft_minus_ce.accuracy << "\n";
        }
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const craft::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

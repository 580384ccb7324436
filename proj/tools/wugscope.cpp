// wugscope: batch pipeline estimating morphological irregularity by
// wug-testing a character-level transducer, then relating irregularity
// to corpus frequency. Stages are resumable: every subcommand reads and
// writes the documented file formats.

#include "wug/corpus.hpp"
#include "wug/cvsplit.hpp"
#include "wug/errors.hpp"
#include "wug/irregularity.hpp"
#include "wug/paradigm_prep.hpp"
#include "wug/pipeline.hpp"
#include "wug/rng.hpp"
#include "wug/stats.hpp"
#include "wug/svg_report.hpp"
#include "wug/synth.hpp"
#include "wug/transducer.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace wug;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << content;
}

struct CommonOpts {
    std::string input, freq, gold, out, config_path;
    int folds = 10;
    std::uint64_t seed = 1;
    double threshold = 0.75;
    int beam = 4;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_pipeline_knobs) {
    cmd->add_option("--input", opts.input, "UniMorph TSV (lemma<TAB>form<TAB>features)");
    cmd->add_option("--freq", opts.freq, "frequency list (form<TAB>count)");
    cmd->add_option("--gold", opts.gold, "gold irregularity labels (unit<TAB>label)");
    cmd->add_option("--out", opts.out, "output file or directory");
    if (with_pipeline_knobs) {
        cmd->add_option("--folds", opts.folds, "cross-validation folds")->capture_default_str();
        cmd->add_option("--seed", opts.seed, "master random seed")->capture_default_str();
        cmd->add_option("--threshold", opts.threshold, "language inclusion accuracy gate")->capture_default_str();
        cmd->add_option("--beam", opts.beam, "decoder beam width")->capture_default_str();
        cmd->add_option("--jobs", opts.jobs, "concurrent folds")->capture_default_str();
    }
}

PipelineConfig load_pipeline_config(const CommonOpts& opts, const CLI::App* cmd) {
    std::map<std::string, std::string> kv;
    if (!opts.config_path.empty()) kv = parse_flat_config(read_file(opts.config_path));
    apply_env_overrides(kv);
    // Explicit flags outrank both the file and the environment.
    auto flag_given = [&](const char* name) { return cmd->count(name) > 0; };
    if (!opts.input.empty()) {
        kv["input.lang"] = opts.input;
        if (!opts.freq.empty()) kv["freq.lang"] = opts.freq;
        if (!opts.gold.empty()) kv["gold.lang"] = opts.gold;
    }
    if (flag_given("--folds")) kv["folds"] = std::to_string(opts.folds);
    if (flag_given("--seed")) kv["seed"] = std::to_string(opts.seed);
    if (flag_given("--threshold")) kv["threshold"] = std::to_string(opts.threshold);
    if (flag_given("--beam")) kv["beam"] = std::to_string(opts.beam);
    if (flag_given("--jobs")) kv["jobs"] = std::to_string(opts.jobs);
    if (flag_given("--out")) kv["out"] = opts.out;
    return config_from_map(kv);
}

std::vector<CollapsedParadigm> load_prepped(const std::string& path, bool filter) {
    auto raw = parse_unimorph(read_file(path));
    std::vector<CollapsedParadigm> collapsed;
    collapsed.reserve(raw.size());
    for (const auto& p : raw) collapsed.push_back(collapse(p));
    if (filter) collapsed = filter_derived(collapsed);
    return collapsed;
}

std::vector<std::string> inflected_lexemes(const std::vector<CollapsedParadigm>& paradigms) {
    std::vector<std::string> lexemes;
    for (const auto& p : paradigms)
        if (p.inflected_cell_count() > 0) lexemes.push_back(p.lexeme);
    std::sort(lexemes.begin(), lexemes.end());
    return lexemes;
}

void print_language_table(const AnalysisReport& report) {
    std::printf("%-12s %8s %8s %10s %9s %9s %s\n", "language", "lexemes", "forms", "forms/lex", "accuracy",
                "avg_iota", "included");
    for (const auto& lang : report.languages)
        std::printf("%-12s %8zu %8zu %10.2f %9.4f %9.4f %s\n", lang.name.c_str(), lang.lexemes, lang.forms,
                    lang.forms_per_lexeme, lang.accuracy, lang.avg_iota, lang.included ? "yes" : "no");
    auto pooled = [](const char* label, const std::optional<PooledAnalysis>& p) {
        if (!p) return;
        std::printf("pooled %-7s beta1=%.4f chi2=%.3f p=%.4g aic_log_odds=%.3f (n=%zu)\n", label, p->full.beta1,
                    p->lrt.chi2, p->lrt.p, p->aic_log_odds_value, p->n_obs);
    };
    pooled("form", report.form_level);
    pooled("lexeme", report.lexeme_level);
}

int cmd_ingest(const CommonOpts& opts) {
    auto paradigms = parse_unimorph(read_file(opts.input));
    std::size_t triples = 0;
    for (const auto& p : paradigms) triples += p.cells.size() - 1;
    std::printf("lexemes=%zu inflected_triples=%zu\n", paradigms.size(), triples);
    if (!opts.out.empty()) write_file(opts.out, to_unimorph(paradigms));
    return 0;
}

int cmd_prep(const CommonOpts& opts) {
    auto raw = parse_unimorph(read_file(opts.input));
    std::vector<CollapsedParadigm> collapsed;
    std::size_t merged_slots = 0, raw_slots = 0;
    for (const auto& p : raw) {
        raw_slots += p.cells.size();
        collapsed.push_back(collapse(p));
        merged_slots += collapsed.back().cells.size();
    }
    auto removed = find_derived(collapsed);
    std::set<std::string> drop;
    for (const auto& d : removed) drop.insert(d.lexeme);
    std::printf("lexemes=%zu slots_before_collapse=%zu slots_after=%zu derived_removed=%zu\n", collapsed.size(),
                raw_slots, merged_slots, removed.size());
    if (!opts.out.empty()) {
        std::vector<Paradigm> kept;
        for (const auto& p : raw)
            if (!drop.count(p.lexeme)) kept.push_back(p);
        write_file((fs::path(opts.out) / "prepped.tsv").string(), to_unimorph(kept));
        write_file((fs::path(opts.out) / "removed.tsv").string(), derived_audit_tsv(removed));
    }
    return 0;
}

int cmd_split(const CommonOpts& opts) {
    auto paradigms = load_prepped(opts.input, true);
    auto sa = assign_splits(inflected_lexemes(paradigms), opts.folds, opts.seed);
    std::string manifest = split_manifest(sa);
    if (opts.out.empty())
        std::fputs(manifest.c_str(), stdout);
    else
        write_file(opts.out, manifest);
    return 0;
}

std::vector<InflectionExample> cell_examples(const std::vector<CollapsedParadigm>& paradigms,
                                             const SplitAssignment& sa, const std::set<int>& splits) {
    std::vector<InflectionExample> out;
    for (const auto& p : paradigms) {
        auto it = sa.assignment.find(p.lexeme);
        if (it == sa.assignment.end() || !splits.count(it->second)) continue;
        for (const auto& [slot, form] : p.cells) {
            if (slot == p.lemma_slot) continue;
            out.push_back({p.lemma_form(), slot, form});
        }
    }
    return out;
}

int cmd_train(const CommonOpts& opts, const std::string& splits_path, int fold_index, const TrainConfig& tc_in) {
    auto paradigms = load_prepped(opts.input, true);
    auto sa = parse_split_manifest(read_file(splits_path));
    auto fold_list = folds(sa);
    if (fold_index < 0 || fold_index >= static_cast<int>(fold_list.size())) throw ConfigError("fold out of range");
    const Fold& fold = fold_list[fold_index];
    auto train_set = cell_examples(paradigms, sa, {fold.train_splits.begin(), fold.train_splits.end()});
    auto dev_set = cell_examples(paradigms, sa, {fold.dev_split});
    TrainConfig tc = tc_in;
    tc.seed = opts.seed;
    TrainStats stats;
    ModelParams params = train(train_set, dev_set, tc, &stats);
    std::printf("train_examples=%zu dev_examples=%zu best_epoch=%d best_dev_loglik=%.6f\n", train_set.size(),
                dev_set.size(), stats.best_epoch, stats.best_dev_loglik);
    if (opts.out.empty()) throw ConfigError("train needs --out for the checkpoint");
    write_file(opts.out, save_checkpoint(params, dataset_hash(train_set), dataset_hash(dev_set)));
    return 0;
}

int cmd_score(const CommonOpts& opts, const std::string& splits_path, int fold_index, const std::string& model_path,
              const std::string& lang_name) {
    auto paradigms = load_prepped(opts.input, true);
    ModelParams params = load_checkpoint(read_file(model_path));
    std::set<std::string> in_scope;
    if (!splits_path.empty()) {
        auto sa = parse_split_manifest(read_file(splits_path));
        auto fold_list = folds(sa);
        if (fold_index < 0 || fold_index >= static_cast<int>(fold_list.size()))
            throw ConfigError("fold out of range");
        for (const auto& [lexeme, split] : sa.assignment)
            if (split == fold_list[fold_index].test_split) in_scope.insert(lexeme);
    }
    std::vector<ScoredForm> scores;
    for (const auto& p : paradigms) {
        if (!splits_path.empty() && !in_scope.count(p.lexeme)) continue;
        for (const auto& [slot, form] : p.cells) {
            if (slot == p.lemma_slot) continue;
            double log_p = forward_logprob(params, p.lemma_form(), slot, form);
            scores.push_back({lang_name, p.lexeme, slot.str(), form, log_p, iota_form(std::exp(log_p)).value});
        }
    }
    std::string tsv = scores_tsv(scores);
    if (opts.out.empty())
        std::fputs(tsv.c_str(), stdout);
    else
        write_file(opts.out, tsv);
    return 0;
}

// Rebuild an analysis report from previously written scores.tsv files.
// Decode accuracy is not recorded in score files, so the inclusion gate is
// not re-applied here: every language with scores participates.
AnalysisReport analyze_from_scores(const PipelineConfig& config) {
    AnalysisReport report;
    report.seed = config.seed;
    report.folds = config.folds;
    report.beam_width = config.beam_width;
    report.accuracy_threshold = config.accuracy_threshold;
    report.train = config.train;
    report.config_hash = [&] {
        std::uint64_t h = fnv1a(resolved_config_text(config));
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return std::string(buf);
    }();

    std::map<std::string, std::vector<CollapsedParadigm>> paradigms_by_lang;
    std::map<std::string, FrequencyTable> freq_by_lang;
    std::set<std::string> included;
    for (const auto& input : config.languages) {
        fs::path scores_path = fs::path(config.out_dir) / input.name / "scores.tsv";
        auto scores = parse_scores_tsv(read_file(scores_path.string()));
        auto paradigms = load_prepped(input.unimorph_path, config.filter_derived_lexemes);
        FrequencyTable freq;
        if (!input.freq_path.empty()) freq = parse_frequency(read_file(input.freq_path));

        LanguageReport lr;
        lr.name = input.name;
        lr.lexemes = inflected_lexemes(paradigms).size();
        lr.forms = scores.size();
        lr.forms_per_lexeme = lr.lexemes ? static_cast<double>(lr.forms) / static_cast<double>(lr.lexemes) : 0.0;
        lr.included = true;
        std::vector<double> iotas;
        for (const auto& s : scores) iotas.push_back(s.iota);
        lr.avg_iota = language_average(iotas);
        {
            std::vector<double> x, y;
            for (const auto& s : scores) {
                std::uint64_t c = freq.count(s.form);
                if (c == 0) continue;
                x.push_back(std::log(static_cast<double>(c)));
                y.push_back(s.iota);
            }
            if (x.size() >= 3) try {
                    lr.form_correlation = pearson(x, y);
                } catch (const NumericError&) {
                }
        }
        if (!input.gold_path.empty())
            lr.gold_validation = validate_against_gold(scores, parse_gold_file(read_file(input.gold_path)));
        included.insert(input.name);
        report.languages.push_back(lr);
        report.scores.insert(report.scores.end(), scores.begin(), scores.end());
        paradigms_by_lang[input.name] = std::move(paradigms);
        freq_by_lang[input.name] = std::move(freq);
    }
    if (included.size() >= 2) {
        for (auto level : {ObservationLevel::Form, ObservationLevel::Lexeme}) {
            auto obs = build_observations(report.scores, paradigms_by_lang, freq_by_lang, level, included);
            try {
                PooledAnalysis p;
                p.full = fit_mixed(obs);
                p.null_fit = fit_mixed_null(obs);
                p.lrt = likelihood_ratio_test(p.full, p.null_fit);
                p.aic_log_odds_value = aic_log_odds(p.full, p.null_fit);
                p.n_obs = obs.rows.size();
                (level == ObservationLevel::Form ? report.form_level : report.lexeme_level) = p;
            } catch (const NumericError&) {
            }
        }
    }
    return report;
}

int cmd_analyze(const PipelineConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("analyze needs --out pointing at a run directory");
    AnalysisReport report = analyze_from_scores(config);
    write_file((fs::path(config.out_dir) / "report.json").string(), report_json(report));
    print_language_table(report);
    return 0;
}

int cmd_report(const PipelineConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("report needs --out pointing at a run directory");
    AnalysisReport report = analyze_from_scores(config);
    for (const auto& [name, svg] : render_figures(report))
        write_file((fs::path(config.out_dir) / "figures" / name).string(), svg);
    print_language_table(report);
    return 0;
}

int cmd_synth(const SynthConfig& sc, const std::string& out_dir) {
    SynthCorpus corpus = generate(sc);
    if (out_dir.empty()) throw ConfigError("synth needs --out");
    write_file((fs::path(out_dir) / "corpus.tsv").string(), corpus.unimorph_tsv());
    write_file((fs::path(out_dir) / "freq.tsv").string(), corpus.frequency_tsv());
    std::string gold;
    for (const auto& p : corpus.paradigms)
        gold += p.lexeme + "\t" + (corpus.gold_irregular.count(p.lexeme) ? "1" : "0") + "\n";
    write_file((fs::path(out_dir) / "gold.tsv").string(), gold);
    std::printf("lexemes=%zu suppletive=%zu out=%s\n", corpus.paradigms.size(), corpus.gold_irregular.size(),
                out_dir.c_str());
    return 0;
}

int cmd_validate(const std::string& scores_path, const std::string& gold_path) {
    auto scores = parse_scores_tsv(read_file(scores_path));
    Correlation c = validate_against_gold(scores, parse_gold_file(read_file(gold_path)));
    std::printf("spearman_rho=%.6f p=%.6g n=%zu\n", c.r, c.p, c.n);
    return 0;
}

int cmd_run(const PipelineConfig& config) {
    AnalysisReport report = run_pipeline(config);
    print_language_table(report);
    if (!config.out_dir.empty()) std::printf("report written to %s/report.json\n", config.out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"morphological irregularity estimation via wug-testing a neural transducer"};
    app.require_subcommand(1);

    CommonOpts opts;
    TrainConfig tc;
    std::string splits_path, model_path, lang_name = "lang";
    int fold_index = 0;
    SynthConfig sc;
    std::string coupling = "uniform";

    auto add_train_knobs = [&](CLI::App* cmd) {
        cmd->add_option("--embedding-dim", tc.embedding_dim)->capture_default_str();
        cmd->add_option("--hidden-dim", tc.hidden_dim)->capture_default_str();
        cmd->add_option("--learning-rate", tc.learning_rate)->capture_default_str();
        cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
        cmd->add_option("--max-epochs", tc.max_epochs)->capture_default_str();
        cmd->add_option("--patience", tc.patience)->capture_default_str();
        cmd->add_option("--grad-clip", tc.grad_clip)->capture_default_str();
    };

    auto* ingest = app.add_subcommand("ingest", "parse a UniMorph file and report corpus shape");
    add_common(ingest, opts, false);
    auto* prep = app.add_subcommand("prep", "collapse syncretism and filter derived lexemes");
    add_common(prep, opts, false);
    auto* split = app.add_subcommand("split", "assign lexemes to cross-validation splits");
    add_common(split, opts, true);
    auto* train_cmd = app.add_subcommand("train", "train one fold's transducer");
    add_common(train_cmd, opts, true);
    train_cmd->add_option("--splits", splits_path, "split manifest")->required();
    train_cmd->add_option("--fold", fold_index, "fold index")->capture_default_str();
    add_train_knobs(train_cmd);
    auto* score = app.add_subcommand("score", "score held-out forms with a checkpoint");
    add_common(score, opts, true);
    score->add_option("--splits", splits_path, "split manifest (omit to score everything)");
    score->add_option("--fold", fold_index, "fold index")->capture_default_str();
    score->add_option("--model", model_path, "checkpoint JSON")->required();
    score->add_option("--lang", lang_name, "language label in the score rows")->capture_default_str();
    auto* analyze = app.add_subcommand("analyze", "recompute statistics from written score files");
    add_common(analyze, opts, true);
    analyze->add_option("--config", opts.config_path, "flat key=value configuration file");
    auto* report_cmd = app.add_subcommand("report", "render figures from written score files");
    add_common(report_cmd, opts, true);
    report_cmd->add_option("--config", opts.config_path, "flat key=value configuration file");
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with known irregulars");
    synth->add_option("--out", opts.out, "output directory")->required();
    synth->add_option("--seed", sc.seed)->capture_default_str();
    synth->add_option("--lexemes", sc.n_lexemes)->capture_default_str();
    synth->add_option("--slots", sc.n_slots)->capture_default_str();
    synth->add_option("--alphabet", sc.alphabet_size)->capture_default_str();
    synth->add_option("--suppletive", sc.n_suppletive)->capture_default_str();
    synth->add_option("--coupling", coupling, "uniform|high-frequency")->capture_default_str();
    synth->add_option("--zipf-s", sc.zipf_s)->capture_default_str();
    auto* validate = app.add_subcommand("validate", "Spearman agreement between scores and gold labels");
    validate->add_option("--scores", splits_path, "scores.tsv")->required();
    validate->add_option("--gold", opts.gold, "gold labels")->required();
    auto* run = app.add_subcommand("run", "end-to-end pipeline");
    add_common(run, opts, true);
    run->add_option("--config", opts.config_path, "flat key=value configuration file");
    add_train_knobs(run);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(opts);
        if (prep->parsed()) return cmd_prep(opts);
        if (split->parsed()) return cmd_split(opts);
        if (train_cmd->parsed()) return cmd_train(opts, splits_path, fold_index, tc);
        if (score->parsed()) return cmd_score(opts, splits_path, fold_index, model_path, lang_name);
        if (analyze->parsed()) return cmd_analyze(load_pipeline_config(opts, analyze));
        if (report_cmd->parsed()) return cmd_report(load_pipeline_config(opts, report_cmd));
        if (synth->parsed()) {
            if (coupling == "uniform")
                sc.coupling = FrequencyCoupling::Uniform;
            else if (coupling == "high-frequency")
                sc.coupling = FrequencyCoupling::HighFrequency;
            else
                throw ConfigError("coupling must be uniform or high-frequency");
            return cmd_synth(sc, opts.out);
        }
        if (validate->parsed()) return cmd_validate(splits_path, opts.gold);
        if (run->parsed()) {
            PipelineConfig config = load_pipeline_config(opts, run);
            if (run->count("--embedding-dim")) config.train.embedding_dim = tc.embedding_dim;
            if (run->count("--hidden-dim")) config.train.hidden_dim = tc.hidden_dim;
            if (run->count("--learning-rate")) config.train.learning_rate = tc.learning_rate;
            if (run->count("--batch-size")) config.train.batch_size = tc.batch_size;
            if (run->count("--max-epochs")) config.train.max_epochs = tc.max_epochs;
            if (run->count("--patience")) config.train.patience = tc.patience;
            if (run->count("--grad-clip")) config.train.grad_clip = tc.grad_clip;
            return cmd_run(config);
        }
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 1;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 3;
    }
    return 0;
}

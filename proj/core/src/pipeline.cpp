#include "wug/pipeline.hpp"

#include "wug/errors.hpp"
#include "wug/rng.hpp"
#include "wug/svg_report.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace wug {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void PipelineConfig::validate() const {
    if (languages.empty()) throw ConfigError("no input languages configured");
    if (!(accuracy_threshold > 0.0 && accuracy_threshold <= 1.0)) throw ConfigError("threshold must be in (0,1]");
    if (beam_width < 1) throw ConfigError("beam width must be >= 1");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    if (folds < 3) throw ConfigError("need at least 3 folds");
    train.validate();
    std::set<std::string> paths;
    for (const auto& lang : languages) {
        if (lang.name.empty() || lang.unimorph_path.empty())
            throw ConfigError("every language needs a name and an input path");
        if (!paths.insert(lang.unimorph_path).second)
            throw ConfigError("duplicate input path " + lang.unimorph_path);
    }
}

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::size_t eq = line.find('=');
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            std::size_t e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        if (eq == std::string::npos) {
            if (!trim(line).empty()) throw ParseError("expected `key = value`", lineno);
            continue;
        }
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("empty key", lineno);
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply_env_overrides(std::map<std::string, std::string>& config) {
    static const char* keys[] = {"folds",      "seed",       "threshold",     "beam",     "jobs",
                                 "out",        "embedding_dim", "hidden_dim", "learning_rate",
                                 "batch_size", "max_epochs", "patience",      "grad_clip",
                                 "filter_derived", "write_checkpoints"};
    for (const char* key : keys) {
        std::string env_name = "WUGSCOPE_";
        for (const char* c = key; *c; ++c) env_name += static_cast<char>(std::toupper(*c));
        if (const char* v = std::getenv(env_name.c_str())) config[key] = v;
    }
}

PipelineConfig config_from_map(const std::map<std::string, std::string>& kv) {
    PipelineConfig config;
    std::map<std::string, LanguageInput> langs;
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto to_int = [](const std::string& key, const std::string& v) {
        try {
            return std::stoi(v);
        } catch (const std::exception&) {
            throw ConfigError("bad integer for " + key + ": " + v);
        }
    };
    auto to_double = [](const std::string& key, const std::string& v) {
        try {
            return std::stod(v);
        } catch (const std::exception&) {
            throw ConfigError("bad number for " + key + ": " + v);
        }
    };
    for (const auto& [key, value] : kv) {
        if (key.rfind("input.", 0) == 0) {
            std::string name = key.substr(6);
            langs[name].name = name;
            langs[name].unimorph_path = value;
        } else if (key.rfind("freq.", 0) == 0) {
            std::string name = key.substr(5);
            langs[name].name = name;
            langs[name].freq_path = value;
        } else if (key.rfind("gold.", 0) == 0) {
            std::string name = key.substr(5);
            langs[name].name = name;
            langs[name].gold_path = value;
        }
    }
    for (auto& [name, input] : langs) config.languages.push_back(input);
    if (const auto* v = get("folds")) config.folds = to_int("folds", *v);
    if (const auto* v = get("seed")) config.seed = std::stoull(*v);
    if (const auto* v = get("threshold")) config.accuracy_threshold = to_double("threshold", *v);
    if (const auto* v = get("beam")) config.beam_width = to_int("beam", *v);
    if (const auto* v = get("jobs")) config.jobs = to_int("jobs", *v);
    if (const auto* v = get("out")) config.out_dir = *v;
    if (const auto* v = get("embedding_dim")) config.train.embedding_dim = to_int("embedding_dim", *v);
    if (const auto* v = get("hidden_dim")) config.train.hidden_dim = to_int("hidden_dim", *v);
    if (const auto* v = get("learning_rate")) config.train.learning_rate = to_double("learning_rate", *v);
    if (const auto* v = get("batch_size")) config.train.batch_size = to_int("batch_size", *v);
    if (const auto* v = get("max_epochs")) config.train.max_epochs = to_int("max_epochs", *v);
    if (const auto* v = get("patience")) config.train.patience = to_int("patience", *v);
    if (const auto* v = get("grad_clip")) config.train.grad_clip = to_double("grad_clip", *v);
    if (const auto* v = get("filter_derived")) config.filter_derived_lexemes = (*v == "true" || *v == "1");
    if (const auto* v = get("write_checkpoints")) config.write_checkpoints = (*v == "true" || *v == "1");
    config.train.seed = config.seed;
    return config;
}

std::string resolved_config_text(const PipelineConfig& config) {
    std::ostringstream out;
    for (const auto& lang : config.languages) {
        out << "input." << lang.name << " = " << lang.unimorph_path << "\n";
        if (!lang.freq_path.empty()) out << "freq." << lang.name << " = " << lang.freq_path << "\n";
        if (!lang.gold_path.empty()) out << "gold." << lang.name << " = " << lang.gold_path << "\n";
    }
    out << "folds = " << config.folds << "\n";
    out << "seed = " << config.seed << "\n";
    out << "threshold = " << config.accuracy_threshold << "\n";
    out << "beam = " << config.beam_width << "\n";
    out << "jobs = " << config.jobs << "\n";
    out << "out = " << config.out_dir << "\n";
    out << "embedding_dim = " << config.train.embedding_dim << "\n";
    out << "hidden_dim = " << config.train.hidden_dim << "\n";
    out << "learning_rate = " << config.train.learning_rate << "\n";
    out << "batch_size = " << config.train.batch_size << "\n";
    out << "max_epochs = " << config.train.max_epochs << "\n";
    out << "patience = " << config.train.patience << "\n";
    out << "grad_clip = " << config.train.grad_clip << "\n";
    out << "filter_derived = " << (config.filter_derived_lexemes ? "true" : "false") << "\n";
    out << "write_checkpoints = " << (config.write_checkpoints ? "true" : "false") << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Per-language pipeline
// ---------------------------------------------------------------------------

namespace {

std::vector<InflectionExample> examples_for(const std::vector<const CollapsedParadigm*>& paradigms) {
    std::vector<InflectionExample> out;
    for (const CollapsedParadigm* p : paradigms) {
        for (const auto& [slot, form] : p->cells) {
            if (slot == p->lemma_slot) continue;
            out.push_back({p->lemma_form(), slot, form});
        }
    }
    return out;
}

struct FoldResult {
    std::vector<ScoredForm> scores;
    std::size_t correct = 0;
    std::size_t total = 0;
    std::string checkpoint;
};

FoldResult run_fold(const std::string& language, const std::vector<CollapsedParadigm>& paradigms,
                    const SplitAssignment& sa, const Fold& fold, const PipelineConfig& config) {
    std::set<int> train_splits(fold.train_splits.begin(), fold.train_splits.end());
    std::vector<const CollapsedParadigm*> train_p, dev_p, test_p;
    for (const auto& p : paradigms) {
        if (p.inflected_cell_count() == 0) continue;
        int split = sa.assignment.at(p.lexeme);
        if (split == fold.test_split)
            test_p.push_back(&p);
        else if (split == fold.dev_split)
            dev_p.push_back(&p);
        else
            train_p.push_back(&p);
    }
    auto train_set = examples_for(train_p);
    auto dev_set = examples_for(dev_p);

    TrainConfig tc = config.train;
    // Decorrelate folds while keeping each fold reproducible.
    tc.seed = SplitMix64(config.seed ^ (0x9e3779b97f4a7c15ULL * (fold.test_split + 1))).next();
    ModelParams params = train(train_set, dev_set, tc);

    FoldResult result;
    result.checkpoint = save_checkpoint(params, dataset_hash(train_set), dataset_hash(dev_set));
    for (const CollapsedParadigm* p : test_p) {
        for (const auto& [slot, form] : p->cells) {
            if (slot == p->lemma_slot) continue;
            double log_p = forward_logprob(params, p->lemma_form(), slot, form);
            ScoredForm sf;
            sf.language = language;
            sf.lexeme = p->lexeme;
            sf.slot = slot.str();
            sf.form = form;
            sf.log_p = log_p;
            sf.iota = iota_form(std::exp(log_p)).value;
            result.scores.push_back(std::move(sf));
            DecodeResult dr = decode(params, p->lemma_form(), slot, config.beam_width);
            if (dr.ok && dr.output == form) ++result.correct;
            ++result.total;
        }
    }
    return result;
}

struct LanguageRun {
    LanguageReport report;
    std::vector<CollapsedParadigm> paradigms;   // post-filter
    FrequencyTable freq;
    std::vector<ScoredForm> scores;
};

LanguageRun run_language(const LanguageInput& input, const PipelineConfig& config) {
    LanguageRun run;
    run.report.name = input.name;

    auto raw = parse_unimorph(read_file(input.unimorph_path));
    if (!input.freq_path.empty()) run.freq = parse_frequency(read_file(input.freq_path));

    std::vector<CollapsedParadigm> collapsed;
    collapsed.reserve(raw.size());
    for (const auto& p : raw) collapsed.push_back(collapse(p));

    std::vector<DerivedLexeme> removed;
    if (config.filter_derived_lexemes) {
        removed = find_derived(collapsed);
        std::set<std::string> drop;
        for (const auto& d : removed) drop.insert(d.lexeme);
        std::vector<CollapsedParadigm> kept;
        for (auto& p : collapsed)
            if (!drop.count(p.lexeme)) kept.push_back(std::move(p));
        collapsed = std::move(kept);
    }
    run.report.removed_derived = removed.size();
    for (const auto& p : collapsed)
        if (p.inflected_cell_count() == 0) ++run.report.lemma_only_excluded;
    run.paradigms = std::move(collapsed);

    std::vector<std::string> lexemes;
    for (const auto& p : run.paradigms)
        if (p.inflected_cell_count() > 0) lexemes.push_back(p.lexeme);
    std::sort(lexemes.begin(), lexemes.end());
    SplitAssignment sa = assign_splits(lexemes, config.folds, config.seed);
    auto fold_list = folds(sa);

    std::vector<FoldResult> results(fold_list.size());
    if (config.jobs > 1) {
        std::vector<std::future<FoldResult>> futures(fold_list.size());
        std::size_t next = 0;
        while (next < fold_list.size()) {
            std::size_t end = std::min(fold_list.size(), next + static_cast<std::size_t>(config.jobs));
            for (std::size_t i = next; i < end; ++i)
                futures[i] = std::async(std::launch::async, run_fold, input.name, std::cref(run.paradigms),
                                        std::cref(sa), std::cref(fold_list[i]), std::cref(config));
            for (std::size_t i = next; i < end; ++i) results[i] = futures[i].get();
            next = end;
        }
    } else {
        for (std::size_t i = 0; i < fold_list.size(); ++i)
            results[i] = run_fold(input.name, run.paradigms, sa, fold_list[i], config);
    }

    std::size_t correct = 0, total = 0;
    std::vector<double> fold_acc;
    for (const auto& r : results) {
        correct += r.correct;
        total += r.total;
        if (r.total > 0) fold_acc.push_back(static_cast<double>(r.correct) / static_cast<double>(r.total));
        run.scores.insert(run.scores.end(), r.scores.begin(), r.scores.end());
    }
    if (total == 0) throw InputError("language " + input.name + " has no inflected forms to score");

    run.report.lexemes = lexemes.size();
    run.report.forms = total;
    run.report.forms_per_lexeme = static_cast<double>(total) / static_cast<double>(lexemes.size());
    run.report.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    run.report.fold_accuracy = fold_acc;
    if (fold_acc.size() > 1) {
        double m = 0.0;
        for (double a : fold_acc) m += a;
        m /= static_cast<double>(fold_acc.size());
        double var = 0.0;
        for (double a : fold_acc) var += (a - m) * (a - m);
        run.report.fold_accuracy_variance = var / static_cast<double>(fold_acc.size());
    }
    std::vector<double> iotas;
    for (const auto& s : run.scores) iotas.push_back(s.iota);
    run.report.avg_iota = language_average(iotas);
    run.report.included = run.report.accuracy >= config.accuracy_threshold;

    // Per-language correlations over positive-count units.
    {
        std::vector<double> x, y;
        for (const auto& s : run.scores) {
            std::uint64_t c = run.freq.count(s.form);
            if (c == 0) continue;
            x.push_back(std::log(static_cast<double>(c)));
            y.push_back(s.iota);
        }
        if (x.size() >= 3) {
            try {
                run.report.form_correlation = pearson(x, y);
            } catch (const NumericError&) {
            }
        }
    }
    {
        std::map<std::string, std::pair<double, std::size_t>> acc;
        for (const auto& s : run.scores) {
            acc[s.lexeme].first += s.iota;
            acc[s.lexeme].second += 1;
        }
        std::vector<double> x, y;
        for (const auto& p : run.paradigms) {
            auto it = acc.find(p.lexeme);
            if (it == acc.end()) continue;
            std::uint64_t c = lexeme_count(p, run.freq);
            if (c == 0) continue;
            x.push_back(std::log(static_cast<double>(c)));
            y.push_back(it->second.first / static_cast<double>(it->second.second));
        }
        if (x.size() >= 3) {
            try {
                run.report.lexeme_correlation = pearson(x, y);
            } catch (const NumericError&) {
            }
        }
    }
    if (!input.gold_path.empty()) {
        auto gold = parse_gold_file(read_file(input.gold_path));
        try {
            run.report.gold_validation = validate_against_gold(run.scores, gold);
        } catch (const NumericError&) {   // constant labels: no rank signal
        }
    }

    if (!config.out_dir.empty()) {
        fs::path dir = fs::path(config.out_dir) / input.name;
        write_file(dir / "splits.tsv", split_manifest(sa));
        write_file(dir / "scores.tsv", scores_tsv(run.scores));
        if (!removed.empty()) write_file(dir / "removed.tsv", derived_audit_tsv(removed));
        if (config.write_checkpoints)
            for (std::size_t i = 0; i < results.size(); ++i)
                write_file(dir / ("fold" + std::to_string(i) + ".ckpt.json"), results[i].checkpoint);
    }
    return run;
}

PooledAnalysis pooled_analysis(const ObservationSet& obs) {
    PooledAnalysis out;
    out.full = fit_mixed(obs);
    out.null_fit = fit_mixed_null(obs);
    out.lrt = likelihood_ratio_test(out.full, out.null_fit);
    out.aic_log_odds_value = aic_log_odds(out.full, out.null_fit);
    out.n_obs = obs.rows.size();
    return out;
}

} // namespace

AnalysisReport run_pipeline(const PipelineConfig& config) {
    config.validate();

    AnalysisReport report;
    report.seed = config.seed;
    report.folds = config.folds;
    report.beam_width = config.beam_width;
    report.accuracy_threshold = config.accuracy_threshold;
    report.train = config.train;
    {
        // The artifact destination has no bearing on the results; keep the
        // hash identical across reruns into different directories.
        PipelineConfig hashed = config;
        hashed.out_dir.clear();
        report.config_hash = hex64(fnv1a(resolved_config_text(hashed)));
    }

    std::map<std::string, std::vector<CollapsedParadigm>> paradigms_by_lang;
    std::map<std::string, FrequencyTable> freq_by_lang;
    std::set<std::string> included;

    for (const auto& input : config.languages) {
        LanguageRun run = run_language(input, config);
        if (run.report.included) included.insert(input.name);
        report.languages.push_back(run.report);
        report.scores.insert(report.scores.end(), run.scores.begin(), run.scores.end());
        paradigms_by_lang[input.name] = std::move(run.paradigms);
        freq_by_lang[input.name] = std::move(run.freq);
    }

    if (included.size() >= 2) {
        auto form_obs =
            build_observations(report.scores, paradigms_by_lang, freq_by_lang, ObservationLevel::Form, included);
        auto lex_obs =
            build_observations(report.scores, paradigms_by_lang, freq_by_lang, ObservationLevel::Lexeme, included);
        try {
            report.form_level = pooled_analysis(form_obs);
        } catch (const NumericError&) {
        }
        try {
            report.lexeme_level = pooled_analysis(lex_obs);
        } catch (const NumericError&) {
        }
    }

    if (!config.out_dir.empty()) {
        fs::path dir(config.out_dir);
        write_file(dir / "resolved_config.txt", resolved_config_text(config));
        write_file(dir / "report.json", report_json(report));
        for (const auto& [name, svg] : render_figures(report)) write_file(dir / "figures" / name, svg);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

namespace {

ordered_json correlation_json(const std::optional<Correlation>& c) {
    if (!c) return nullptr;
    return ordered_json{{"r", c->r}, {"p", c->p}, {"n", c->n}};
}

ordered_json fit_json(const MixedModelFit& f) {
    return ordered_json{
        {"beta0", f.beta0},
        {"beta1", f.beta1},
        {"random_cov", {{f.random_cov[0][0], f.random_cov[0][1]}, {f.random_cov[1][0], f.random_cov[1][1]}}},
        {"residual_var", f.residual_var},
        {"loglik", f.loglik},
        {"aic", f.aic},
        {"n_params", f.n_params},
        {"converged", f.converged},
        {"n_obs", f.n_obs},
        {"n_groups", f.n_groups},
    };
}

ordered_json pooled_json(const std::optional<PooledAnalysis>& p) {
    if (!p) return nullptr;
    return ordered_json{
        {"full", fit_json(p->full)},
        {"null", fit_json(p->null_fit)},
        {"lrt", {{"chi2", p->lrt.chi2}, {"df", p->lrt.df}, {"p", p->lrt.p}, {"floored", p->lrt.floored}}},
        {"aic_log_odds", p->aic_log_odds_value},
        {"n_obs", p->n_obs},
    };
}

} // namespace

std::string report_json(const AnalysisReport& report) {
    ordered_json j;
    j["languages"] = ordered_json::array();
    for (const auto& lang : report.languages) {
        ordered_json lj{
            {"name", lang.name},
            {"lexemes", lang.lexemes},
            {"forms", lang.forms},
            {"forms_per_lexeme", lang.forms_per_lexeme},
            {"accuracy", lang.accuracy},
            {"fold_accuracy", lang.fold_accuracy},
            {"fold_accuracy_variance", lang.fold_accuracy_variance},
            {"avg_iota", lang.avg_iota},
            {"included", lang.included},
            {"removed_derived", lang.removed_derived},
            {"lemma_only_excluded", lang.lemma_only_excluded},
            {"form_correlation", correlation_json(lang.form_correlation)},
            {"lexeme_correlation", correlation_json(lang.lexeme_correlation)},
            {"gold_validation", correlation_json(lang.gold_validation)},
        };
        j["languages"].push_back(std::move(lj));
    }
    j["pooled"]["form"] = pooled_json(report.form_level);
    j["pooled"]["lexeme"] = pooled_json(report.lexeme_level);
    j["provenance"] = ordered_json{
        {"seed", report.seed},
        {"folds", report.folds},
        {"beam_width", report.beam_width},
        {"accuracy_threshold", report.accuracy_threshold},
        {"train",
         {{"embedding_dim", report.train.embedding_dim},
          {"hidden_dim", report.train.hidden_dim},
          {"learning_rate", report.train.learning_rate},
          {"batch_size", report.train.batch_size},
          {"max_epochs", report.train.max_epochs},
          {"patience", report.train.patience},
          {"grad_clip", report.train.grad_clip}}},
        {"iota_epsilon", report.iota_epsilon},
        {"log_base", report.log_base},
        {"prng", report.prng},
        {"config_hash", report.config_hash},
        {"lemma_cells_scored", false},
    };
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Gold validation
// ---------------------------------------------------------------------------

std::map<std::string, double> parse_gold_file(const std::string& text) {
    std::map<std::string, double> gold;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected `unit<TAB>label`", lineno);
        try {
            gold[line.substr(0, tab)] = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError("bad numeric label", lineno);
        }
    }
    return gold;
}

Correlation validate_against_gold(const std::vector<ScoredForm>& scores, const std::map<std::string, double>& gold) {
    // Prefer form-keyed intersection; fall back to lexeme keys.
    std::vector<double> iota, label;
    for (const auto& s : scores) {
        auto it = gold.find(s.form);
        if (it != gold.end()) {
            iota.push_back(s.iota);
            label.push_back(it->second);
        }
    }
    if (iota.empty()) {
        std::map<std::string, std::pair<double, std::size_t>> acc;
        for (const auto& s : scores) {
            acc[s.lexeme].first += s.iota;
            acc[s.lexeme].second += 1;
        }
        for (const auto& [lexeme, sum_n] : acc) {
            auto it = gold.find(lexeme);
            if (it == gold.end()) continue;
            iota.push_back(sum_n.first / static_cast<double>(sum_n.second));
            label.push_back(it->second);
        }
    }
    if (iota.empty()) throw InputError("gold annotations share no units with the scored forms");
    return spearman(iota, label);
}

} // namespace wug

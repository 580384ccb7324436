#include "wug/irregularity.hpp"

#include "wug/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wug {

IrregularityScore iota_form(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("probability outside [0,1]");
    double clamped = std::clamp(p, kIotaEps, 1.0 - kIotaEps);
    // Two separate logs keep the score antisymmetric at the clamp bounds;
    // 1 - (1 - eps) != eps in doubles, so -log(p/(1-p)) would not be.
    double complement = std::clamp(1.0 - p, kIotaEps, 1.0 - kIotaEps);
    IrregularityScore s;
    s.probability = clamped;
    s.value = std::log(complement) - std::log(clamped);
    s.level = IotaLevel::Form;
    return s;
}

std::optional<IrregularityScore> iota_lexeme(const CollapsedParadigm& paradigm,
                                             const std::map<MergedSlot, IrregularityScore>& form_scores) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [slot, form] : paradigm.cells) {
        if (slot == paradigm.lemma_slot) continue;
        auto it = form_scores.find(slot);
        if (it == form_scores.end()) throw NumericError("missing form score for cell " + slot.str());
        sum += it->second.value;
        ++n;
    }
    if (n == 0) return std::nullopt;   // lemma-only paradigm, Eq-undefined
    IrregularityScore s;
    s.value = sum / static_cast<double>(n);
    s.level = IotaLevel::Lexeme;
    return s;
}

double language_average(const std::vector<double>& form_iotas) {
    if (form_iotas.empty()) throw NumericError("language_average of empty score set");
    double sum = 0.0;
    for (double v : form_iotas) sum += v;
    return sum / static_cast<double>(form_iotas.size());
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string scores_tsv(const std::vector<ScoredForm>& scores) {
    std::string out;
    for (const auto& s : scores) {
        out += s.language;
        out += '\t';
        out += s.lexeme;
        out += '\t';
        out += s.slot;
        out += '\t';
        out += s.form;
        out += '\t';
        out += fmt_double(s.log_p);
        out += '\t';
        out += fmt_double(s.iota);
        out += '\n';
    }
    return out;
}

std::vector<ScoredForm> parse_scores_tsv(const std::string& text) {
    std::vector<ScoredForm> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            std::size_t tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (fields.size() != 6) throw ParseError("expected 6 tab-separated fields", lineno);
        ScoredForm s;
        s.language = fields[0];
        s.lexeme = fields[1];
        s.slot = fields[2];
        s.form = fields[3];
        s.log_p = std::stod(fields[4]);
        s.iota = std::stod(fields[5]);
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace wug

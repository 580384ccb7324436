#ifndef WUG_SVG_REPORT_HPP
#define WUG_SVG_REPORT_HPP

#include "wug/pipeline.hpp"

#include <string>
#include <utility>
#include <vector>

namespace wug {

// Static SVG bar chart. Bars flagged significant carry class="sig" and a
// distinct fill; that class attribute is the documented contract for
// significance styling.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values, const std::vector<bool>& significant);

// Figure renderings of the report: average iota per language and the
// per-language iota/frequency correlations at both levels. An empty
// language set yields a valid SVG carrying a notice.
std::vector<std::pair<std::string, std::string>> render_figures(const AnalysisReport& report);

} // namespace wug

#endif

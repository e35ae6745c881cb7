#include "ecg/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ecg {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string delineation_svg(const DelineatedRecord& d, const PlotOptions& o) {
    const auto& rec = d.record;
    const double fs = rec.sample_rate_hz;
    const auto n = rec.num_samples();
    const auto first = std::min(n, static_cast<std::size_t>(std::max(0.0, o.start_s) * fs));
    const auto last = std::min(n, first + static_cast<std::size_t>(o.duration_s * fs));

    std::vector<std::size_t> leads;
    for (const auto& name : o.leads)
        if (auto idx = rec.lead_index(name)) leads.push_back(*idx);

    const double margin_left = 50.0, top = o.title.empty() ? 10.0 : 30.0;
    const double plot_w = o.width - margin_left - 10.0;
    const double height = top + o.lead_height * static_cast<double>(leads.size()) + 10.0;
    const double span = std::max<double>(1.0, static_cast<double>(last - first));
    auto x_of = [&](std::size_t i) { return margin_left + plot_w * static_cast<double>(i - first) / span; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << num(height)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!o.title.empty()) svg << "<text x=\"" << margin_left << "\" y=\"20\">" << escape_xml(o.title) << "</text>\n";

    for (std::size_t row = 0; row < leads.size(); ++row) {
        const auto l = leads[row];
        const auto& y = rec.leads[l];
        const double y0 = top + o.lead_height * static_cast<double>(row);
        if (first >= last) break;
        const auto [lo_it, hi_it] = std::minmax_element(y.begin() + static_cast<std::ptrdiff_t>(first),
                                                        y.begin() + static_cast<std::ptrdiff_t>(last));
        const double lo = *lo_it, hi = std::max(*hi_it, lo + 1.0);
        auto y_of = [&](double v) { return y0 + 10.0 + (o.lead_height - 20.0) * (hi - v) / (hi - lo); };

        svg << "<text x=\"5\" y=\"" << num(y0 + o.lead_height / 2.0) << "\">" << escape_xml(rec.lead_names[l])
            << "</text>\n";
        svg << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
        for (std::size_t i = first; i < last; ++i) svg << num(x_of(i)) << "," << num(y_of(y[i])) << " ";
        svg << "\"/>\n";

        auto mark = [&](const std::optional<std::size_t>& idx, const char* colour, const char* dash) {
            if (!idx || *idx < first || *idx >= last) return;
            svg << "<line x1=\"" << num(x_of(*idx)) << "\" x2=\"" << num(x_of(*idx)) << "\" y1=\"" << num(y0 + 5)
                << "\" y2=\"" << num(y0 + o.lead_height - 5) << "\" stroke=\"" << colour << "\"";
            if (*dash) svg << " stroke-dasharray=\"" << dash << "\"";
            svg << "/>\n";
        };
        for (const auto& c : d.cycles[l]) {
            mark(c.p_on, "#1f77b4", "6,4");
            mark(c.p_off, "#1f77b4", "6,4");
            mark(c.qrs_on, "#d62728", "");
            mark(c.qrs_off, "#d62728", "");
            mark(c.t_on, "#2ca02c", "2,3");
            mark(c.t_off, "#2ca02c", "2,3");
            if (c.r >= first && c.r < last)
                svg << "<circle cx=\"" << num(x_of(c.r)) << "\" cy=\"" << num(y_of(y[c.r]))
                    << "\" r=\"3\" fill=\"#d62728\"/>\n";
        }
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace ecg

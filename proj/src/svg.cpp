#include "kanforge/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace kf {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

SvgChart::SvgChart(int width, int height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {}

void SvgChart::add_curve(const std::vector<double>& xs, const std::vector<double>& ys,
                         const std::string& label) {
    curves_.push_back({xs, ys, label});
}

std::string SvgChart::render() const {
    const double ml = 60, mr = 20, mt = 34, mb = 40;  // margins
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const Curve& c : curves_) {
        for (std::size_t i = 0; i < c.xs.size(); ++i) {
            double y = c.ys[i];
            if (log_y_ && y <= 0) continue;
            if (log_y_) y = std::log10(y);
            if (first) {
                xmin = xmax = c.xs[i];
                ymin = ymax = y;
                first = false;
            } else {
                xmin = std::min(xmin, c.xs[i]);
                xmax = std::max(xmax, c.xs[i]);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) {
        if (log_y_) y = std::log10(std::max(y, 1e-300));
        return mt + ph - (y - ymin) / (ymax - ymin) * ph;
    };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
       << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    os << "  <rect width=\"" << width_ << "\" height=\"" << height_
       << "\" fill=\"white\"/>\n";
    os << "  <text x=\"" << width_ / 2 << "\" y=\"20\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"14\">" << escape_xml(title_) << "</text>\n";

    // axes
    os << "  <line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    os << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    auto tick_label = [&](double v) {
        return log_y_ ? ("1e" + fmt(v)) : fmt(v);
    };
    os << "  <text x=\"" << ml - 6 << "\" y=\"" << mt + ph << "\" text-anchor=\"end\" "
       << "font-family=\"sans-serif\" font-size=\"11\">" << tick_label(ymin) << "</text>\n";
    os << "  <text x=\"" << ml - 6 << "\" y=\"" << mt + 10 << "\" text-anchor=\"end\" "
       << "font-family=\"sans-serif\" font-size=\"11\">" << tick_label(ymax) << "</text>\n";
    os << "  <text x=\"" << ml << "\" y=\"" << mt + ph + 16
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xmin) << "</text>\n";
    os << "  <text x=\"" << ml + pw << "\" y=\"" << mt + ph + 16
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(xmax)
       << "</text>\n";

    for (std::size_t ci = 0; ci < curves_.size(); ++ci) {
        const Curve& c = curves_[ci];
        os << "  <polyline class=\"curve\" fill=\"none\" stroke=\""
           << kPalette[ci % 10] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < c.xs.size(); ++i) {
            if (log_y_ && c.ys[i] <= 0) continue;
            if (i) os << " ";
            os << fmt(px(c.xs[i])) << "," << fmt(py(c.ys[i]));
        }
        os << "\"/>\n";
        if (!c.label.empty()) {
            os << "  <text x=\"" << ml + pw - 4 << "\" y=\"" << mt + 14 + 14 * ci
               << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
               << kPalette[ci % 10] << "\">" << escape_xml(c.label) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

void SvgChart::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write SVG file: " + path);
    out << render();
}

std::string plot_layer_activations(const KanModel& model, int layer, int samples) {
    require(layer >= 0 && layer < static_cast<int>(model.layers.size()),
            "plot_layer_activations: layer index out of range");
    const KanLayer& l = model.layers[layer];
    const SplineGrid& grid = l.edges[0].spline.grid;
    SvgChart chart(640, 420, "layer " + std::to_string(layer) + " edge activations");
    std::vector<double> xs(samples), ys(samples);
    for (int s = 0; s < samples; ++s)
        xs[s] = grid.lo + (grid.hi - grid.lo) * s / (samples - 1);
    for (int j = 0; j < l.out_dim; ++j)
        for (int i = 0; i < l.in_dim; ++i) {
            for (int s = 0; s < samples; ++s) ys[s] = edge_eval(l.edge(j, i), xs[s]);
            chart.add_curve(xs, ys,
                            "phi(" + std::to_string(j) + "," + std::to_string(i) + ")");
        }
    return chart.render();
}

std::string plot_basis_functions(const SplineGrid& grid, int samples) {
    SvgChart chart(640, 420,
                   "B-spline basis, G=" + std::to_string(grid.interior) +
                       " k=" + std::to_string(grid.degree));
    std::vector<double> xs(samples);
    for (int s = 0; s < samples; ++s)
        xs[s] = grid.lo + (grid.hi - grid.lo) * s / (samples - 1);
    for (int b = 0; b < grid.basis_count(); ++b) {
        std::vector<double> ys(samples);
        for (int s = 0; s < samples; ++s) ys[s] = basis_eval(grid, xs[s])[b];
        chart.add_curve(xs, ys);
    }
    return chart.render();
}

std::string plot_trace(const TrainTrace& trace, const std::string& title) {
    SvgChart chart(640, 420, title);
    chart.set_log_y(true);
    std::vector<double> it, loss, reg, gnorm;
    for (const TraceRow& r : trace.rows) {
        it.push_back(r.iteration);
        loss.push_back(r.train_loss);
        reg.push_back(r.reg);
        gnorm.push_back(r.grad_norm);
    }
    chart.add_curve(it, loss, "train_loss");
    chart.add_curve(it, reg, "reg");
    chart.add_curve(it, gnorm, "grad_norm");
    return chart.render();
}

}  // namespace kf

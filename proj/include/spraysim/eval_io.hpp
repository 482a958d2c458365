#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spraysim/eval.hpp"

// Line-delimited detection interchange format.
//   predictions: image_id class confidence xmin ymin xmax ymax [rle]
//   truths:      image_id class xmin ymin xmax ymax [rle]
// The optional trailing token is a mask run-length encoding
// "x0,y0,w,h:run,run,..." with runs alternating starting from value 0.
// Evaluation matches on boxes; masks ride along for downstream tools.

namespace spraysim {

inline std::vector<PredInstance> read_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open predictions: " + path);
    std::vector<PredInstance> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        PredInstance p;
        if (!(ss >> p.image_id >> p.class_id >> p.confidence >> p.box.x_min >> p.box.y_min >>
              p.box.x_max >> p.box.y_max))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed prediction line");
        out.push_back(p);
    }
    return out;
}

inline std::vector<TruthInstance> read_truths(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open truths: " + path);
    std::vector<TruthInstance> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        TruthInstance t;
        if (!(ss >> t.image_id >> t.class_id >> t.box.x_min >> t.box.y_min >> t.box.x_max >> t.box.y_max))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed truth line");
        out.push_back(t);
    }
    return out;
}

inline void write_eval_report_text(const EvalReport& rep, std::ostream& out) {
    char buf[256];
    for (const ClassEval& ce : rep.per_class) {
        std::snprintf(buf, sizeof buf,
                      "class %d: tp=%lld fp=%lld fn=%lld precision=%.4f recall=%.4f f1=%.4f ap=%.4f\n",
                      ce.class_id, (long long)ce.counts.tp, (long long)ce.counts.fp,
                      (long long)ce.counts.fn, ce.precision, ce.recall, ce.f1, ce.ap);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "mAP@50 = %.4f\n", rep.map);
    out << buf;
}

inline void write_pr_curve_csv(const EvalReport& rep, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "class,confidence,recall,precision\n";
    char buf[128];
    for (const ClassEval& ce : rep.per_class)
        for (const PrPoint& p : ce.pr) {
            std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f\n", ce.class_id, p.confidence, p.recall,
                          p.precision);
            out << buf;
        }
}

}  // namespace spraysim

// Copyright 2026 The keytrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef KEYTRACK_EVAL_REPORT_HPP_
#define KEYTRACK_EVAL_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "keytrack/common/error.hpp"
#include "keytrack/eval/evaluate.hpp"

namespace keytrack::eval {

struct MethodResult {
  std::string label;
  SweepReport report;
};

inline std::string FormatNumber(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::vector<double> PsiList(const SweepReport& r) {
  std::vector<double> out;
  for (const EpisodeReport& e : r.episodes) out.push_back(e.psi);
  return out;
}

// One row per method and band (easy, hard, overall). All methods must have
// been evaluated on the same psi grid and seeds.
inline std::string ComparisonCsv(const std::vector<MethodResult>& methods) {
  Require(!methods.empty(), ErrorCode::kInvalidArgument, "nothing to compare");
  for (const MethodResult& m : methods)
    Require(m.report.seeds == methods.front().report.seeds && PsiList(m.report) == PsiList(methods.front().report),
            ErrorCode::kInvalidArgument, "method '" + m.label + "' was evaluated on a different psi grid or seed set");
  std::ostringstream out;
  out << "method,band,episodes,success_mean,success_std,E_l_bpe_dense_mm_mean,E_l_bpe_dense_mm_std,"
         "E_g_bpe_sparse_mm_mean,E_g_bpe_sparse_mm_std,E_smth_dense_mean,E_smth_dense_std\n";
  for (const MethodResult& m : methods)
    for (const char* band : {"easy", "hard", "overall"}) {
      const BandSummary& s = m.report.band(band);
      out << m.label << "," << band << "," << s.episodes;
      for (const Stat* st : {&s.success, &s.e_l_mm, &s.e_g_mm, &s.e_smth})
        out << "," << FormatNumber(st->mean) << "," << FormatNumber(st->std);
      out << "\n";
    }
  return out.str();
}

struct Series {
  std::string name;
  std::vector<double> xs, ys;
};

// Minimal line chart: axes with min/max tick labels, one polyline and
// legend entry per series.
inline std::string SvgLinePlot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                               const std::vector<Series>& series) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double w = 640, h = 400, l = 70, r = 160, t = 40, b = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      x0 = std::min(x0, s.xs[i]);
      x1 = std::max(x1, s.xs[i]);
      y0 = std::min(y0, s.ys[i]);
      y1 = std::max(y1, s.ys[i]);
    }
  if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double x) { return l + (x - x0) / (x1 - x0) * (w - l - r); };
  auto py = [&](double y) { return h - b - (y - y0) / (y1 - y0) * (h - t - b); };
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  o << "<line x1=\"" << l << "\" y1=\"" << h - b << "\" x2=\"" << w - r << "\" y2=\"" << h - b << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << l << "\" y1=\"" << t << "\" x2=\"" << l << "\" y2=\"" << h - b << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << l << "\" y=\"" << h - b + 16 << "\" text-anchor=\"middle\">" << FormatNumber(x0) << "</text>\n";
  o << "<text x=\"" << w - r << "\" y=\"" << h - b + 16 << "\" text-anchor=\"middle\">" << FormatNumber(x1) << "</text>\n";
  o << "<text x=\"" << l - 6 << "\" y=\"" << h - b << "\" text-anchor=\"end\">" << FormatNumber(y0) << "</text>\n";
  o << "<text x=\"" << l - 6 << "\" y=\"" << t + 4 << "\" text-anchor=\"end\">" << FormatNumber(y1) << "</text>\n";
  o << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  o << "<text transform=\"translate(16," << (t + h - b) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << ylabel
    << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* c = kColors[k % 6];
    o << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < s.xs.size() && i < s.ys.size(); ++i)
      if (std::isfinite(s.xs[i]) && std::isfinite(s.ys[i])) o << px(s.xs[i]) << "," << py(s.ys[i]) << " ";
    o << "\"/>\n";
    const double ly = t + 16 * (k + 1);
    o << "<line x1=\"" << w - r + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << w - r + 30 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << w - r + 35 << "\" y=\"" << ly << "\">" << s.name << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// Mean sparse global error per psi value (averaged over seeds and repeats).
inline Series ErrorVsPsi(const MethodResult& m) {
  std::map<double, std::vector<double>> by_psi;
  for (const EpisodeReport& e : m.report.episodes) by_psi[e.psi].push_back(e.e_g_bpe_sparse_mm);
  Series s{m.label, {}, {}};
  for (const auto& [psi, v] : by_psi) {
    s.xs.push_back(psi);
    s.ys.push_back(MeanStd(v).mean);
  }
  return s;
}

inline void WriteText(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  Require(f.good(), ErrorCode::kIo, "cannot write " + path);
  f << text;
  Require(f.good(), ErrorCode::kIo, "write failed: " + path);
}

}  // namespace keytrack::eval

#endif  // KEYTRACK_EVAL_REPORT_HPP_

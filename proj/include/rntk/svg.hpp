#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "rntk/io.hpp"
#include "rntk/types.hpp"

namespace rntk {

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

struct MarkerStyle {
  const char* color;
  char shape;  // 'c' circle, 's' square, 't' triangle, 'd' diamond
};

inline MarkerStyle marker_style(std::size_t class_index) {
  static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  static constexpr char shapes[] = {'c', 's', 't', 'd'};
  return {colors[class_index % 8], shapes[class_index % 4]};
}

inline void emit_marker(std::ostream& out, double px, double py, const MarkerStyle& st,
                        double size = 4.0, const char* css_class = "marker") {
  char buf[256];
  switch (st.shape) {
    case 's':
      std::snprintf(buf, sizeof(buf),
                    "<rect class=\"%s\" x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\" fill-opacity=\"0.75\"/>",
                    css_class, px - size, py - size, 2 * size, 2 * size, st.color);
      break;
    case 't':
      std::snprintf(buf, sizeof(buf),
                    "<path class=\"%s\" d=\"M %.2f %.2f L %.2f %.2f L %.2f %.2f Z\" fill=\"%s\" fill-opacity=\"0.75\"/>",
                    css_class, px, py - size * 1.2, px - size * 1.1, py + size, px + size * 1.1,
                    py + size, st.color);
      break;
    case 'd':
      std::snprintf(buf, sizeof(buf),
                    "<path class=\"%s\" d=\"M %.2f %.2f L %.2f %.2f L %.2f %.2f L %.2f %.2f Z\" fill=\"%s\" fill-opacity=\"0.75\"/>",
                    css_class, px, py - size * 1.3, px + size * 1.3, py, px, py + size * 1.3,
                    px - size * 1.3, py, st.color);
      break;
    default:
      std::snprintf(buf, sizeof(buf),
                    "<circle class=\"%s\" cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\" fill-opacity=\"0.75\"/>",
                    css_class, px, py, size, st.color);
  }
  out << "  " << buf << '\n';
}

}  // namespace detail

/// Writes a 2-D embedding as a standalone SVG scatter plot: one marker shape
/// and color per class, axes auto-scaled with a 5% margin, legend included.
inline void write_scatter_svg(const Embedding& e, const std::filesystem::path& path,
                              const std::string& title = "") {
  validate(e);
  if (e.dim() != 2)
    throw ValidationError("scatter svg: embedding must be 2-D, got k = " + std::to_string(e.dim()));

  // class -> style index, ordered by label value; unlabeled rows get their own bucket
  std::map<int, std::size_t> class_order;
  bool any_unlabeled = false;
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    if (!e.labels.empty() && e.labels[static_cast<std::size_t>(i)])
      class_order.emplace(*e.labels[static_cast<std::size_t>(i)], 0);
    else
      any_unlabeled = true;
  }
  std::size_t idx = 0;
  for (auto& [label, slot] : class_order) slot = idx++;
  const std::size_t unlabeled_slot = idx;

  const double width = 720, height = 540;
  const double ml = 60, mr = 150, mt = 50, mb = 50;
  double xmin = e.coords.col(0).minCoeff(), xmax = e.coords.col(0).maxCoeff();
  double ymin = e.coords.col(1).minCoeff(), ymax = e.coords.col(1).maxCoeff();
  const double xpad = (xmax - xmin) > 0 ? 0.05 * (xmax - xmin) : 1.0;
  const double ypad = (ymax - ymin) > 0 ? 0.05 * (ymax - ymin) : 1.0;
  xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;
  const auto to_px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  const auto to_py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  auto out = detail::open_output(path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "  <rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
      << "\" fill=\"white\"/>\n";
  out << "  <rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << (width - ml - mr)
      << "\" height=\"" << (height - mt - mb)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  if (!title.empty())
    out << "  <text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"" << (mt - 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
        << detail::xml_escape(title) << "</text>\n";
  out << "  <text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"" << (height - 14)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">dim 1</text>\n";
  out << "  <text x=\"18\" y=\"" << (mt + (height - mt - mb) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 18 "
      << (mt + (height - mt - mb) / 2) << ")\">dim 2</text>\n";

  for (Eigen::Index i = 0; i < e.size(); ++i) {
    std::size_t slot = unlabeled_slot;
    if (!e.labels.empty() && e.labels[static_cast<std::size_t>(i)])
      slot = class_order[*e.labels[static_cast<std::size_t>(i)]];
    detail::emit_marker(out, to_px(e.coords(i, 0)), to_py(e.coords(i, 1)),
                        detail::marker_style(slot));
  }

  // legend
  double ly = mt + 10;
  const double lx = width - mr + 16;
  out << "  <text x=\"" << lx << "\" y=\"" << ly
      << "\" font-family=\"sans-serif\" font-size=\"12\" font-weight=\"bold\">classes</text>\n";
  ly += 18;
  for (const auto& [label, slot] : class_order) {
    detail::emit_marker(out, lx + 6, ly - 4, detail::marker_style(slot), 5.0, "legend");
    out << "  <text x=\"" << (lx + 18) << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">class " << label << "</text>\n";
    ly += 18;
  }
  if (any_unlabeled) {
    detail::emit_marker(out, lx + 6, ly - 4, detail::marker_style(unlabeled_slot), 5.0, "legend");
    out << "  <text x=\"" << (lx + 18) << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"12\">unlabeled</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw ValidationError("write failed for '" + path.string() + "'");
}

}  // namespace rntk

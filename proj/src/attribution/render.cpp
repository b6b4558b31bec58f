#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>

#include "molexplain/attribution.hpp"

namespace molexplain::attribution {

namespace {

using nlohmann::json;

double max_abs_of(std::span<const double> s) {
  double m = 0.0;
  for (double v : s) m = std::max(m, std::abs(v));
  return m;
}

std::string atom_label(const chem::Atom& a) {
  std::string s(chem::element_symbol(a.element));
  if (s.empty()) s = "#" + std::to_string(a.element);
  if (a.aromatic) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  if (a.formal_charge > 0) s += std::string(static_cast<std::size_t>(a.formal_charge), '+');
  if (a.formal_charge < 0) s += std::string(static_cast<std::size_t>(-a.formal_charge), '-');
  return s;
}

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Fruchterman-Reingold from a circular start; deterministic.
std::vector<Point> spring_layout(const chem::MolecularGraph& g) {
  const std::size_t n = g.atom_count();
  std::vector<Point> p(n);
  if (n == 0) return p;
  const double radius = std::max(1.0, static_cast<double>(n) / 3.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    p[i] = {radius * std::cos(t), radius * std::sin(t)};
  }
  const double k = 1.0;
  double temperature = radius;
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<Point> disp(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double dx = p[i].x - p[j].x, dy = p[i].y - p[j].y;
        const double d = std::max(1e-3, std::hypot(dx, dy));
        const double f = k * k / d;
        dx /= d;
        dy /= d;
        disp[i].x += dx * f;
        disp[i].y += dy * f;
        disp[j].x -= dx * f;
        disp[j].y -= dy * f;
      }
    }
    for (const chem::Bond& b : g.bonds()) {
      const auto i = static_cast<std::size_t>(b.begin), j = static_cast<std::size_t>(b.end);
      double dx = p[i].x - p[j].x, dy = p[i].y - p[j].y;
      const double d = std::max(1e-3, std::hypot(dx, dy));
      const double f = d * d / k;
      dx /= d;
      dy /= d;
      disp[i].x -= dx * f;
      disp[i].y -= dy * f;
      disp[j].x += dx * f;
      disp[j].y += dy * f;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double len = std::hypot(disp[i].x, disp[i].y);
      if (len > 0.0) {
        const double step = std::min(len, temperature);
        p[i].x += disp[i].x / len * step;
        p[i].y += disp[i].y / len * step;
      }
    }
    temperature = std::max(0.01, temperature * 0.97);
  }
  return p;
}

std::string render_json(const chem::MolecularGraph& g, std::span<const double> s, double max_abs) {
  json atoms = json::array();
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    const chem::Atom& a = g.atom(v);
    atoms.push_back({{"index", v},
                     {"element", std::string(chem::element_symbol(a.element))},
                     {"aromatic", a.aromatic},
                     {"charge", a.formal_charge},
                     {"implicit_h", a.implicit_h},
                     {"score", s[static_cast<std::size_t>(v)]},
                     {"color", score_color(s[static_cast<std::size_t>(v)], max_abs)}});
  }
  json bonds = json::array();
  for (const chem::Bond& b : g.bonds()) {
    bonds.push_back({{"begin", b.begin}, {"end", b.end}, {"order", static_cast<int>(b.order)}});
  }
  json doc = {{"smiles", g.empty() ? std::string() : chem::to_smiles(g)},
              {"atoms", atoms},
              {"bonds", bonds},
              {"scores", std::vector<double>(s.begin(), s.end())},
              {"color_scale", {{"normalization", "per-molecule max |score|"}, {"max_abs_score", max_abs}}}};
  return doc.dump(2) + "\n";
}

std::string render_dot(const chem::MolecularGraph& g, std::span<const double> s, double max_abs) {
  std::string out = "graph molecule {\n";
  out += "  // colour scale: per-molecule max |score| = " + json(max_abs).dump() + "\n";
  out += "  node [shape=circle, style=filled, fontname=Helvetica];\n";
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    const double score = s[static_cast<std::size_t>(v)];
    out += "  a" + std::to_string(v) + " [label=\"" + atom_label(g.atom(v)) + "\", fillcolor=\"" +
           score_color(score, max_abs) + "\", tooltip=\"" + json(score).dump() + "\"];\n";
  }
  for (const chem::Bond& b : g.bonds()) {
    std::string style;
    switch (b.order) {
      case chem::BondOrder::Single: break;
      case chem::BondOrder::Double: style = " [color=\"black:black\"]"; break;
      case chem::BondOrder::Triple: style = " [color=\"black:black:black\"]"; break;
      case chem::BondOrder::Aromatic: style = " [style=dashed]"; break;
    }
    out += "  a" + std::to_string(b.begin) + " -- a" + std::to_string(b.end) + style + ";\n";
  }
  out += "}\n";
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_svg(const chem::MolecularGraph& g, std::span<const double> s, double max_abs) {
  const std::vector<Point> p = spring_layout(g);
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  if (!p.empty()) {
    min_x = max_x = p[0].x;
    min_y = max_y = p[0].y;
  }
  for (const Point& q : p) {
    min_x = std::min(min_x, q.x);
    max_x = std::max(max_x, q.x);
    min_y = std::min(min_y, q.y);
    max_y = std::max(max_y, q.y);
  }
  const double scale = 50.0, margin = 30.0;
  auto px = [&](double x) { return margin + (x - min_x) * scale; };
  auto py = [&](double y) { return margin + (y - min_y) * scale; };
  const double width = 2 * margin + (max_x - min_x) * scale;
  const double height = 2 * margin + (max_y - min_y) * scale;
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
                    fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " + fmt(height) + "\">\n";
  out += "  <desc>colour scale: per-molecule max |score| = " + json(max_abs).dump() + "</desc>\n";
  for (const chem::Bond& b : g.bonds()) {
    const Point& a = p[static_cast<std::size_t>(b.begin)];
    const Point& c = p[static_cast<std::size_t>(b.end)];
    const int order = b.order == chem::BondOrder::Aromatic ? 1 : static_cast<int>(b.order);
    const std::string dash = b.order == chem::BondOrder::Aromatic ? " stroke-dasharray=\"4,3\"" : "";
    const double dx = c.y - a.y, dy = a.x - c.x;
    const double len = std::max(1e-9, std::hypot(dx, dy));
    for (int i = 0; i < order; ++i) {
      const double off = (i - (order - 1) / 2.0) * 4.0 / scale;
      const double ox = dx / len * off, oy = dy / len * off;
      out += "  <line x1=\"" + fmt(px(a.x + ox)) + "\" y1=\"" + fmt(py(a.y + oy)) + "\" x2=\"" + fmt(px(c.x + ox)) +
             "\" y2=\"" + fmt(py(c.y + oy)) + "\" stroke=\"black\" stroke-width=\"1.5\"" + dash + "/>\n";
    }
  }
  for (std::size_t v = 0; v < p.size(); ++v) {
    out += "  <circle cx=\"" + fmt(px(p[v].x)) + "\" cy=\"" + fmt(py(p[v].y)) + "\" r=\"12\" fill=\"" +
           score_color(s[v], max_abs) + "\" stroke=\"black\"><title>" + json(s[v]).dump() + "</title></circle>\n";
    out += "  <text x=\"" + fmt(px(p[v].x)) + "\" y=\"" + fmt(py(p[v].y) + 4.0) +
           "\" font-family=\"Helvetica\" font-size=\"11\" text-anchor=\"middle\">" +
           atom_label(g.atom(static_cast<int>(v))) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

RenderFormat render_format_from_name(const std::string& name) {
  if (name == "json") return RenderFormat::Json;
  if (name == "dot") return RenderFormat::Dot;
  if (name == "svg") return RenderFormat::Svg;
  throw UserError("unknown output format '" + name + "' (expected json, dot or svg)");
}

std::string score_color(double score, double max_abs) {
  double t = max_abs > 0.0 ? std::clamp(score / max_abs, -1.0, 1.0) : 0.0;
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(t))));
  int r = 255, g = 255, b = 255;
  if (t > 0.0) {
    g = b = fade;
  } else if (t < 0.0) {
    r = g = fade;
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string render_attribution(const chem::MolecularGraph& g, std::span<const double> per_atom,
                               RenderFormat format) {
  if (per_atom.size() != g.atom_count()) {
    throw UserError("score count " + std::to_string(per_atom.size()) + " does not match atom count " +
                    std::to_string(g.atom_count()));
  }
  const double max_abs = max_abs_of(per_atom);
  switch (format) {
    case RenderFormat::Json: return render_json(g, per_atom, max_abs);
    case RenderFormat::Dot: return render_dot(g, per_atom, max_abs);
    case RenderFormat::Svg: return render_svg(g, per_atom, max_abs);
  }
  return {};
}

RenderedScores parse_attribution_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    RenderedScores out;
    out.scores = doc.at("scores").get<std::vector<double>>();
    out.smiles = doc.value("smiles", std::string());
    for (const json& a : doc.at("atoms")) {
      chem::Atom atom;
      atom.element = chem::atomic_number(a.at("element").get<std::string>());
      if (atom.element == 0) throw UserError("invalid attribution document: unknown element");
      atom.aromatic = a.value("aromatic", false);
      atom.formal_charge = a.value("charge", 0);
      atom.implicit_h = a.value("implicit_h", 0);
      out.graph.add_atom(atom);
    }
    for (const json& b : doc.at("bonds")) {
      const int order = b.at("order").get<int>();
      if (order < 1 || order > 4) throw UserError("invalid attribution document: bad bond order");
      out.graph.add_bond(b.at("begin").get<int>(), b.at("end").get<int>(), static_cast<chem::BondOrder>(order));
    }
    out.graph.perceive_rings();
    if (out.scores.size() != out.graph.atom_count()) {
      throw UserError("invalid attribution document: score count does not match atom count");
    }
    return out;
  } catch (const json::exception& e) {
    throw UserError(std::string("invalid attribution document: ") + e.what());
  }
}

}  // namespace molexplain::attribution

#include "mixlap/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mixlap {

using nlohmann::json;

void validate_keys(const json& obj, const std::vector<std::string>& allowed,
                   const std::string& where) {
  require(obj.is_object(), Errc::config_error, where + " must be a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      raise(Errc::config_error, "unknown key '" + it.key() + "' in " + where);
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json domain_to_json(const DomainSpec& spec) {
  using Shape = DomainSpec::Shape;
  json params = json::object();
  switch (spec.shape) {
    case Shape::interval:
      params = {{"a", spec.a}, {"b", spec.b}};
      break;
    case Shape::box:
      params = {{"ax", spec.lo[0]}, {"bx", spec.hi[0]}, {"ay", spec.lo[1]},
                {"by", spec.hi[1]}};
      break;
    case Shape::ball: {
      const auto& b = spec.ball_list.front();
      json c = json::array({b.c[0]});
      if (spec.dim() == 2) c.push_back(b.c[1]);
      params = {{"c", c}, {"r", b.r}};
      break;
    }
    case Shape::balls: {
      json balls = json::array();
      for (const auto& b : spec.ball_list) {
        json c = json::array({b.c[0]});
        if (spec.dim() == 2) c.push_back(b.c[1]);
        balls.push_back({{"c", c}, {"r", b.r}});
      }
      params = {{"balls", balls}};
      break;
    }
    case Shape::intervals: {
      json iv = json::array();
      for (const auto& [a, b] : spec.interval_list) iv.push_back(json::array({a, b}));
      params = {{"intervals", iv}};
      break;
    }
    case Shape::annulus:
      params = {{"cx", spec.center[0]}, {"cy", spec.center[1]}, {"r_in", spec.r_in},
                {"r_out", spec.r_out}};
      break;
    case Shape::custom: {
      json m = json::array();
      for (bool b : spec.cmask) m.push_back(b ? 1 : 0);
      params = {{"nx", spec.cnx}, {"ny", spec.cny}, {"h", spec.ch}, {"mask", m}};
      break;
    }
  }
  return {{"shape", spec.name()}, {"params", params}};
}

namespace {

Eigen::Vector2d center_from_json(const json& c, int* dim) {
  require(c.is_array() && (c.size() == 1 || c.size() == 2), Errc::config_error,
          "ball center must be a 1- or 2-element array");
  *dim = static_cast<int>(c.size());
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (size_t i = 0; i < c.size(); ++i) v[static_cast<int>(i)] = c[i].get<double>();
  return v;
}

}  // namespace

DomainSpec domain_from_json(const json& j) {
  validate_keys(j, {"shape", "params"}, "domain");
  require(j.contains("shape") && j.contains("params"), Errc::config_error,
          "domain needs 'shape' and 'params'");
  const std::string shape = j["shape"].get<std::string>();
  const json& p = j["params"];

  if (shape == "interval") {
    validate_keys(p, {"a", "b"}, "interval params");
    return DomainSpec::interval_spec(p.at("a").get<double>(), p.at("b").get<double>());
  }
  if (shape == "box") {
    validate_keys(p, {"ax", "bx", "ay", "by"}, "box params");
    return DomainSpec::box_spec(p.at("ax").get<double>(), p.at("bx").get<double>(),
                                p.at("ay").get<double>(), p.at("by").get<double>());
  }
  if (shape == "ball") {
    validate_keys(p, {"c", "r"}, "ball params");
    int dim = 1;
    const Eigen::Vector2d c = center_from_json(p.at("c"), &dim);
    return dim == 1 ? DomainSpec::ball_spec_1d(c[0], p.at("r").get<double>())
                    : DomainSpec::ball_spec_2d(c[0], c[1], p.at("r").get<double>());
  }
  if (shape == "balls") {
    validate_keys(p, {"balls"}, "balls params");
    std::vector<DomainSpec::BallGeom> balls;
    int dim = 0;
    for (const auto& bj : p.at("balls")) {
      validate_keys(bj, {"c", "r"}, "ball entry");
      int d = 1;
      DomainSpec::BallGeom b;
      b.c = center_from_json(bj.at("c"), &d);
      b.r = bj.at("r").get<double>();
      require(dim == 0 || dim == d, Errc::config_error, "mixed ball dimensions");
      dim = d;
      balls.push_back(b);
    }
    require(!balls.empty(), Errc::config_error, "empty ball list");
    return DomainSpec::balls_spec(std::move(balls), dim);
  }
  if (shape == "intervals") {
    validate_keys(p, {"intervals"}, "intervals params");
    std::vector<std::pair<double, double>> iv;
    for (const auto& e : p.at("intervals")) {
      require(e.is_array() && e.size() == 2, Errc::config_error,
              "interval entries must be [a,b]");
      iv.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
    return DomainSpec::intervals_spec(std::move(iv));
  }
  if (shape == "annulus") {
    validate_keys(p, {"cx", "cy", "r_in", "r_out"}, "annulus params");
    return DomainSpec::annulus_spec(p.at("cx").get<double>(), p.at("cy").get<double>(),
                                    p.at("r_in").get<double>(),
                                    p.at("r_out").get<double>());
  }
  if (shape == "custom") {
    validate_keys(p, {"nx", "ny", "h", "mask"}, "custom params");
    std::vector<bool> mask;
    for (const auto& e : p.at("mask")) mask.push_back(e.get<int>() != 0);
    return DomainSpec::custom_spec(p.at("nx").get<int>(), p.at("ny").get<int>(),
                                   p.at("h").get<double>(), std::move(mask));
  }
  raise(Errc::config_error, "unknown domain shape '" + shape + "'");
}

json kernel_to_json(const Kernel& k) {
  json j = {{"family", kernel_family_name(k.family)}};
  if (k.family == KernelFamily::truncated_fractional) {
    j["s"] = k.s;
    j["p"] = k.order_p;
    j["epsilon"] = k.epsilon;
    j["r_cut"] = k.radius;
  } else {
    j["radius"] = k.radius;
  }
  if (k.weight != 1.0) j["weight"] = k.weight;
  return j;
}

std::optional<Kernel> kernel_from_json(const json& j, int dim) {
  require(j.is_object() && j.contains("family"), Errc::config_error,
          "kernel needs a 'family'");
  const std::string fam = j["family"].get<std::string>();
  if (fam == "local") {
    validate_keys(j, {"family"}, "kernel");
    return std::nullopt;
  }
  const double weight = j.value("weight", 1.0);
  if (fam == "truncated_fractional") {
    validate_keys(j, {"family", "s", "p", "epsilon", "r_cut", "weight"}, "kernel");
    return fractional_kernel(dim, j.at("s").get<double>(), j.at("p").get<double>(),
                             j.at("epsilon").get<double>(), j.at("r_cut").get<double>(),
                             weight);
  }
  validate_keys(j, {"family", "radius", "weight"}, "kernel");
  KernelFamily f;
  if (fam == "tent")
    f = KernelFamily::tent;
  else if (fam == "truncated_gaussian")
    f = KernelFamily::truncated_gaussian;
  else if (fam == "bump")
    f = KernelFamily::bump;
  else
    raise(Errc::config_error, "unknown kernel family '" + fam + "'");
  return make_kernel(f, dim, j.at("radius").get<double>(), weight);
}

json eigenresult_to_json(const EigenResult& r) {
  return {{"lambda", r.lambda},
          {"residual", r.residual},
          {"iterations", r.iterations},
          {"converged", r.converged}};
}

std::string svg_line_chart(const std::string& title, const std::string& xlabel,
                           const std::string& ylabel, const std::vector<double>& x,
                           const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, Errc::invalid_spec,
          "chart needs matching x/y series with at least two points");
  const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double xmin = x[0], xmax = x[0], ymin = y[0], ymax = y[0];
  for (size_t i = 0; i < x.size(); ++i) {
    xmin = std::min(xmin, x[i]);
    xmax = std::max(xmax, x[i]);
    ymin = std::min(ymin, y[i]);
    ymax = std::max(ymax, y[i]);
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymax += 0.5;
    ymin -= 0.5;
  }
  const double yspan = ymax - ymin;
  ymin -= 0.05 * yspan;
  ymax += 0.05 * yspan;

  auto sx = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto sy = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\""
     << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\""
     << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\""
     << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4;
    const double yv = ymin + (ymax - ymin) * k / 4;
    os << "<text x=\"" << sx(xv) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">";
    char b1[32];
    std::snprintf(b1, sizeof b1, "%.4g", xv);
    os << b1 << "</text>\n";
    os << "<text x=\"" << L - 8 << "\" y=\"" << sy(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">";
    std::snprintf(b1, sizeof b1, "%.5g", yv);
    os << b1 << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << sy(yv) << "\" x2=\"" << W - R
       << "\" y2=\"" << sy(yv) << "\" stroke=\"#dddddd\"/>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (T + H - B) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
     << "transform=\"rotate(-90 16 " << (T + H - B) / 2 << ")\">" << ylabel
     << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < x.size(); ++i) os << sx(x[i]) << "," << sy(y[i]) << " ";
  os << "\"/>\n";
  for (size_t i = 0; i < x.size(); ++i)
    os << "<circle cx=\"" << sx(x[i]) << "\" cy=\"" << sy(y[i])
       << "\" r=\"3\" fill=\"#1f77b4\"/>\n";
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), Errc::config_error, "cannot open '" + path + "' for writing");
  f << content;
  require(f.good(), Errc::config_error, "failed writing '" + path + "'");
}

}  // namespace mixlap

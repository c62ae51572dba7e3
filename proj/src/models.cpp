#include "magspec/models.hpp"

#include <cmath>
#include <sstream>

#include "magspec/expr.hpp"

namespace magspec {

namespace {

// Jet of g = exp(-|q - c|^2).
RealJet gauss_jet(const Point& q, const Point& c) {
  const double x = q[0] - c[0], y = q[1] - c[1];
  const double g = std::exp(-(x * x + y * y));
  RealJet j;
  j.v = g;
  j.d1 = -2 * x * g;
  j.d2 = -2 * y * g;
  j.d11 = (4 * x * x - 2) * g;
  j.d12 = 4 * x * y * g;
  j.d22 = (4 * y * y - 2) * g;
  j.d222 = (12 * y - 8 * y * y * y) * g;
  return j;
}

ComplexJet scaled(const RealJet& r, cplx s, cplx shift = 0.0) {
  return {s * r.v + shift, s * r.d1, s * r.d2, s * r.d11, s * r.d12, s * r.d22};
}

RealJet two_minus(const RealJet& g) {
  return {2 - g.v, -g.d1, -g.d2, -g.d11, -g.d12, -g.d22, -g.d222};
}

FieldModel radial(const Point& c) {
  FieldModel m;
  m.B = [c](const Point& q) { return 2.0 - gauss_jet(q, c).v; };
  m.B_jet = [c](const Point& q) { return two_minus(gauss_jet(q, c)); };
  m.V = [](const Point&) { return cplx(0.0); };
  m.V_jet = [](const Point&) { return ComplexJet{}; };
  m.b0 = 1.0;
  m.V_real = true;
  return m;
}

std::vector<double> parse_args(const std::string& key, const std::string& name) {
  std::vector<double> out;
  if (key.size() < name.size() + 2 || key.back() != ')') throw Error(Error::Kind::InvalidInput, "malformed model key " + key);
  std::string inner = key.substr(name.size() + 1, key.size() - name.size() - 2);
  std::stringstream ss(inner);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw Error(Error::Kind::InvalidInput, "malformed argument '" + tok + "' in model key " + key);
    }
    while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
    if (used != tok.size()) throw Error(Error::Kind::InvalidInput, "malformed argument '" + tok + "' in model key " + key);
    out.push_back(v);
  }
  return out;
}

bool has_args(const std::string& key, const std::string& name) {
  return key.rfind(name + "(", 0) == 0;
}

}  // namespace

std::vector<std::string> model_keys() {
  return {"landau", "radial_well", "radial_well(a1,a2)", "imaginary_well", "perturbed_well(eps)"};
}

FieldModel make_model(const std::string& key) {
  if (key == "landau") {
    FieldModel m;
    m.B = [](const Point&) { return 1.0; };
    m.B_jet = [](const Point&) { return RealJet{1.0}; };
    m.V = [](const Point&) { return cplx(0.0); };
    m.V_jet = [](const Point&) { return ComplexJet{}; };
    m.b0 = 1.0;
    m.V_real = true;
    m.name = key;
    return m;
  }
  if (key == "radial_well" || has_args(key, "radial_well")) {
    Point c{0.0, 0.0};
    if (key != "radial_well") {
      auto a = parse_args(key, "radial_well");
      if (a.size() != 2) throw Error(Error::Kind::InvalidInput, "radial_well takes two center coordinates");
      c = {a[0], a[1]};
    }
    FieldModel m = radial(c);
    m.name = key;
    return m;
  }
  if (key == "imaginary_well") {
    FieldModel m;
    m.B = [](const Point&) { return 1.0; };
    m.B_jet = [](const Point&) { return RealJet{1.0}; };
    const Point c{0.0, 0.0};
    m.V = [c](const Point& q) { return I * (1.0 - gauss_jet(q, c).v); };
    m.V_jet = [c](const Point& q) { return scaled(gauss_jet(q, c), -I, I); };
    m.b0 = 1.0;
    m.u = 1.0;
    m.v = 1.0;
    m.name = key;
    return m;
  }
  if (has_args(key, "perturbed_well")) {
    auto a = parse_args(key, "perturbed_well");
    if (a.size() != 1) throw Error(Error::Kind::InvalidInput, "perturbed_well takes one amplitude");
    const double eps = a[0];
    FieldModel m = radial({0.0, 0.0});
    const Point c{1.0, 0.0};
    const cplx s = eps * cplx(0.5, 0.5);
    m.V = [c, s](const Point& q) { return s * gauss_jet(q, c).v; };
    m.V_jet = [c, s](const Point& q) { return scaled(gauss_jet(q, c), s); };
    m.V_real = eps == 0.0;
    m.name = key;
    return m;
  }
  throw Error(Error::Kind::InvalidInput, "unknown model key '" + key + "'");
}

FieldModel expression_model(const std::string& B_text, const std::string& V_text, double b0, double u, double v,
                            const Rect& box) {
  Expression Be = Expression::parse(B_text);
  Expression Ve = Expression::parse(V_text.empty() ? "0" : V_text);
  FieldModel m;
  m.name = "expr";
  m.u = u;
  m.v = v;
  m.B = [Be](const Point& q) {
    cplx b = Be(q);
    if (std::abs(b.imag()) > 1e-12 * std::max(1.0, std::abs(b.real())))
      throw Error(Error::Kind::InvalidModel, "B expression is not real at a sampled point");
    return b.real();
  };
  m.V = [Ve](const Point& q) { return Ve(q); };
  const int n = 101;
  double bmin = INFINITY;
  bool real_v = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Point q{box.x0 + (box.x1 - box.x0) * i / (n - 1), box.y0 + (box.y1 - box.y0) * j / (n - 1)};
      bmin = std::min(bmin, m.B(q));
      if (m.V(q).imag() != 0.0) real_v = false;
    }
  m.b0 = b0 > 0 ? b0 : bmin;
  m.V_real = real_v;
  return m;
}

}  // namespace magspec

#include "orbitlab/linalg.hpp"

#include <algorithm>
#include <cctype>

namespace orbitlab {

RealMatrix to_real(const ExactMatrix& m) {
  RealMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).to_real();
  return r;
}

ExactMatrix to_exact(const IntMatrix& m) {
  ExactMatrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = ExactScalar(static_cast<long>(m(i, j)));
  return r;
}

ExactMatrix parse_matrix_literal(std::string_view text, std::size_t n) {
  std::vector<ExactScalar> entries;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) entries.push_back(ExactScalar::parse(token));
    token.clear();
  };
  for (char c : text) {
    if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c)))
      flush();
    else
      token.push_back(c);
  }
  flush();
  if (entries.size() != n * n)
    throw std::invalid_argument("matrix literal has " + std::to_string(entries.size()) +
                                " entries, expected " + std::to_string(n * n));
  return ExactMatrix(n, n, std::move(entries));
}

std::string format_matrix_literal(const ExactMatrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += m(i, j).to_string();
    }
  }
  return out;
}

NormKind parse_norm_kind(std::string_view text) {
  if (text == "frobenius") return NormKind::Frobenius;
  if (text == "max") return NormKind::MaxEntry;
  throw std::invalid_argument("unknown norm '" + std::string(text) + "' (frobenius|max)");
}

std::string to_string(NormKind kind) { return kind == NormKind::Frobenius ? "frobenius" : "max"; }

NormValue NormValue::exact(ExactScalar value) {
  if (value.sign() < 0) throw std::invalid_argument("negative norm");
  NormValue n;
  n.approx_ = value.to_real();
  n.square_ = value * value;
  return n;
}

NormValue NormValue::sqrt_of(ExactScalar square) {
  if (square.sign() < 0) throw std::invalid_argument("negative squared norm");
  NormValue n;
  n.approx_ = round_real(std::sqrt(square.to_real()));
  n.square_ = std::move(square);
  return n;
}

NormValue NormValue::real(Real value) {
  NormValue n;
  n.approx_ = value;
  return n;
}

std::optional<ExactScalar> NormValue::exact_value() const {
  if (!square_) return std::nullopt;
  return exact_sqrt(*square_);
}

bool NormValue::within(const Radius& r) const {
  if (square_) return *square_ <= r.square();
  return approx_ <= r.value();
}

int compare(const NormValue& a, const NormValue& b) {
  if (a.square_ && b.square_) {
    auto c = *a.square_ <=> *b.square_;
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  return a.approx_ < b.approx_ ? -1 : (a.approx_ > b.approx_ ? 1 : 0);
}

NormValue max(const NormValue& a, const NormValue& b) { return compare(a, b) >= 0 ? a : b; }

NormValue matrix_norm(const ExactMatrix& m, const Place& place, NormKind kind) {
  if (place.is_finite()) {
    if (kind == NormKind::Frobenius)
      throw std::invalid_argument("Frobenius norm is not defined at a finite place");
    ExactScalar best(0);
    for (const auto& x : m.data()) best = std::max(best, padic_abs(x, place.prime()));
    return NormValue::exact(best);
  }
  if (kind == NormKind::Frobenius) {
    ExactScalar sum(0);
    for (const auto& x : m.data()) sum += x * x;
    return NormValue::sqrt_of(sum);
  }
  ExactScalar best(0);
  for (const auto& x : m.data()) best = std::max(best, x.abs());
  return NormValue::exact(best);
}

NormValue matrix_norm(const RealMatrix& m, const Place& place, NormKind kind) {
  if (place.is_finite())
    throw std::invalid_argument("real matrices only live at the archimedean place");
  Real out = 0;
  if (kind == NormKind::Frobenius) {
    for (Real x : m.data()) out += x * x;
    out = std::sqrt(out);
  } else {
    for (Real x : m.data()) out = std::max(out, std::abs(x));
  }
  return NormValue::real(round_real(out));
}

ExactMatrix inverse(const ExactMatrix& m) {
  if (!m.square()) throw std::invalid_argument("inverse of a non-square matrix");
  const std::size_t n = m.rows();
  ExactMatrix a = m, inv = ExactMatrix::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && a(pivot, col).is_zero()) ++pivot;
    if (pivot == n) throw std::domain_error("singular matrix");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(pivot, j), a(col, j));
      std::swap(inv(pivot, j), inv(col, j));
    }
    const ExactScalar p = a(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      a(col, j) /= p;
      inv(col, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a(r, col).is_zero()) continue;
      const ExactScalar f = a(r, col);
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(col, j);
        inv(r, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

namespace {
template <class Variant>
std::size_t variant_dim(const Variant& v, bool matrix) {
  return std::visit(
      [matrix](const auto& x) -> std::size_t {
        if constexpr (requires { x.rows(); }) {
          if (!x.square()) throw std::invalid_argument("placed matrix component is not square");
          return x.rows();
        } else {
          (void)matrix;
          return x.size();
        }
      },
      v);
}
}  // namespace

PlacedMatrix::PlacedMatrix(std::vector<Component> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("placed matrix needs at least one place");
  n_ = variant_dim(components_.front().value, true);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (variant_dim(c.value, true) != n_)
      throw std::invalid_argument("placed matrix components differ in dimension");
    if (c.place.is_finite() && !std::holds_alternative<ExactMatrix>(c.value))
      throw std::invalid_argument("finite-place components must be exact");
    for (std::size_t j = 0; j < i; ++j)
      if (components_[j].place == c.place) throw std::invalid_argument("duplicate place");
  }
}

PlacedMatrix PlacedMatrix::diagonal(const ExactMatrix& m, std::span<const Place> places) {
  std::vector<Component> comps;
  for (const auto& p : places) comps.push_back({p, m});
  return PlacedMatrix(std::move(comps));
}

const PlacedMatrix::Component& PlacedMatrix::at(const Place& place) const {
  for (const auto& c : components_)
    if (c.place == place) return c;
  throw std::out_of_range("no component at place " + place.to_string());
}

bool PlacedMatrix::has(const Place& place) const {
  return std::any_of(components_.begin(), components_.end(),
                     [&](const auto& c) { return c.place == place; });
}

PlacedVector::PlacedVector(std::vector<Component> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("placed vector needs at least one place");
  n_ = variant_dim(components_.front().value, false);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    if (variant_dim(c.value, false) != n_)
      throw std::invalid_argument("placed vector components differ in dimension");
    if (c.place.is_finite() && !std::holds_alternative<std::vector<ExactScalar>>(c.value))
      throw std::invalid_argument("finite-place components must be exact");
    for (std::size_t j = 0; j < i; ++j)
      if (components_[j].place == c.place) throw std::invalid_argument("duplicate place");
  }
}

const PlacedVector::Component& PlacedVector::at(const Place& place) const {
  for (const auto& c : components_)
    if (c.place == place) return c;
  throw std::out_of_range("no component at place " + place.to_string());
}

bool PlacedVector::has(const Place& place) const {
  return std::any_of(components_.begin(), components_.end(),
                     [&](const auto& c) { return c.place == place; });
}

NormValue size_function(const PlacedMatrix& g, const PlaceNorms& kinds) {
  std::optional<NormValue> best;
  for (const auto& comp : g.components()) {
    auto it = std::find_if(kinds.begin(), kinds.end(),
                           [&](const auto& k) { return k.first == comp.place; });
    if (it == kinds.end())
      throw std::invalid_argument("no norm kind given for place " + comp.place.to_string());
    NormValue v = std::visit([&](const auto& m) { return matrix_norm(m, comp.place, it->second); },
                             comp.value);
    best = best ? max(*best, v) : v;
  }
  return *best;
}

std::vector<std::vector<std::size_t>> lex_subsets(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > n) return out;
  std::vector<std::size_t> cur(k);
  for (std::size_t i = 0; i < k; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    std::size_t i = k;
    while (i > 0 && cur[i - 1] == n - k + i - 1) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

std::size_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Real vol_first_rows(const RealMatrix& g, std::size_t k) {
  if (!g.square()) throw std::invalid_argument("vol_first_rows needs a square matrix");
  if (k < 1 || k > g.rows()) throw std::out_of_range("row count out of range");
  RealMatrix top(k, g.cols());
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < g.cols(); ++j) top(i, j) = g(i, j);
  Real sum = 0;
  for (Real x : wedge_point(top)) sum += x * x;
  return round_real(std::sqrt(sum));
}

}  // namespace orbitlab

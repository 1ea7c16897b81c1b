#include "paraspec/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "paraspec/errors.hpp"
#include "paraspec/numerics.hpp"
#include "fftw_lock.hpp"

namespace paraspec {

// ---------------------------------------------------------------------------
// FourierObservable

FourierObservable FourierObservable::constant(int dim, std::complex<double> c) {
  FourierObservable f(dim);
  f.add(Frequency(static_cast<std::size_t>(dim), 0), c);
  return f;
}

FourierObservable FourierObservable::character(const Frequency& m, std::complex<double> c) {
  FourierObservable f(static_cast<int>(m.size()));
  f.add(m, c);
  return f;
}

FourierObservable& FourierObservable::add(const Frequency& m, std::complex<double> c) {
  if (static_cast<int>(m.size()) != dim_)
    throw DimensionMismatch("frequency of length " + std::to_string(m.size()) + " on T^" + std::to_string(dim_));
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                             [](const auto& term, const Frequency& key) { return term.first < key; });
  if (it != terms_.end() && it->first == m) {
    it->second += c;
    if (it->second == std::complex<double>(0.0)) terms_.erase(it);
  } else if (c != std::complex<double>(0.0)) {
    terms_.insert(it, {m, c});
  }
  return *this;
}

std::complex<double> FourierObservable::operator()(std::span<const double> x) const {
  if (static_cast<int>(x.size()) < dim_) throw DimensionMismatch("point has too few coordinates");
  std::complex<double> acc = 0.0;
  for (const auto& [m, c] : terms_) {
    double turns = 0.0;
    bool zero = true;
    for (int a = 0; a < dim_; ++a) {
      if (m[a] != 0) {
        turns += m[a] * x[a];
        zero = false;
      }
    }
    if (zero) {
      acc += c;
      continue;
    }
    const double angle = kTwoPi * frac(turns);
    acc += c * std::complex<double>(std::cos(angle), std::sin(angle));
  }
  return acc;
}

FourierObservable FourierObservable::derivative(int axis) const {
  FourierObservable out(dim_);
  for (const auto& [m, c] : terms_)
    if (m[axis] != 0) out.terms_.push_back({m, c * std::complex<double>(0.0, kTwoPi * m[axis])});
  return out;
}

FourierObservable FourierObservable::apply_p(int axis) const {
  FourierObservable out(dim_);
  for (const auto& [m, c] : terms_)
    if (m[axis] != 0) out.terms_.push_back({m, c * (kTwoPi * m[axis])});
  return out;
}

FourierObservable FourierObservable::scaled(std::complex<double> s) const {
  FourierObservable out(dim_);
  if (s == std::complex<double>(0.0)) return out;
  for (const auto& [m, c] : terms_) out.terms_.push_back({m, c * s});
  return out;
}

double FourierObservable::sup_bound() const {
  double s = 0.0;
  for (const auto& term : terms_) s += std::abs(term.second);
  return s;
}

double FourierObservable::l2_norm_sq() const {
  double s = 0.0;
  for (const auto& term : terms_) s += std::norm(term.second);
  return s;
}

int FourierObservable::bandwidth(int axis) const {
  int w = 0;
  for (const auto& term : terms_) w = std::max(w, std::abs(term.first[axis]));
  return w;
}

std::complex<double> FourierObservable::mean() const {
  for (const auto& [m, c] : terms_)
    if (std::all_of(m.begin(), m.end(), [](int v) { return v == 0; })) return c;
  return 0.0;
}

bool FourierObservable::is_real_valued(double tol) const {
  for (const auto& [m, c] : terms_) {
    Frequency neg(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) neg[a] = -m[a];
    auto it = std::lower_bound(terms_.begin(), terms_.end(), neg,
                               [](const auto& term, const Frequency& key) { return term.first < key; });
    const std::complex<double> partner = (it != terms_.end() && it->first == neg) ? it->second : 0.0;
    if (std::abs(partner - std::conj(c)) > tol * std::max(1.0, std::abs(c))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Text form

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, std::string_view context) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InvalidSpec("bad number '" + std::string(s) + "' in '" + std::string(context) + "'");
  return v;
}

int parse_int(std::string_view s, std::string_view context) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw InvalidSpec("bad integer '" + std::string(s) + "' in '" + std::string(context) + "'");
  return v;
}

std::complex<double> parse_coefficient(std::string_view s, std::string_view context) {
  s = trim(s);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') throw InvalidSpec("unbalanced parenthesis in '" + std::string(context) + "'");
    std::string_view inner = s.substr(1, s.size() - 2);
    const auto comma = inner.find(',');
    if (comma == std::string_view::npos) return parse_double(inner, context);
    return {parse_double(inner.substr(0, comma), context), parse_double(inner.substr(comma + 1), context)};
  }
  return parse_double(s, context);
}

}  // namespace

FourierObservable parse_trig_poly(std::string_view text, int dim) {
  FourierObservable f(dim);
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(';', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view term = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (term.empty()) continue;
    const std::size_t open = term.rfind('(');
    const bool has_call = term.back() == ')' && open != std::string_view::npos && open > 0 &&
                          std::isalpha(static_cast<unsigned char>(term[open - 1]));
    if (!has_call) {
      const std::complex<double> c = parse_coefficient(term, term);
      if (c != std::complex<double>(0.0)) f.add(Frequency(static_cast<std::size_t>(dim), 0), c);
      continue;
    }
    std::size_t name_begin = open;
    while (name_begin > 0 && std::isalpha(static_cast<unsigned char>(term[name_begin - 1]))) --name_begin;
    const std::string_view name = term.substr(name_begin, open - name_begin);
    std::string_view prefix = trim(term.substr(0, name_begin));
    std::complex<double> c = 1.0;
    if (!prefix.empty()) {
      if (prefix.back() != '*') throw InvalidSpec("expected '*' before '" + std::string(name) + "' in '" +
                                                  std::string(term) + "'");
      prefix.remove_suffix(1);
      c = parse_coefficient(prefix, term);
    }
    Frequency m;
    std::string_view args = term.substr(open + 1, term.size() - open - 2);
    std::size_t ap = 0;
    while (ap <= args.size()) {
      std::size_t ae = args.find(',', ap);
      if (ae == std::string_view::npos) ae = args.size();
      m.push_back(parse_int(args.substr(ap, ae - ap), term));
      ap = ae + 1;
    }
    if (static_cast<int>(m.size()) != dim)
      throw InvalidSpec("term '" + std::string(term) + "' has " + std::to_string(m.size()) +
                        " frequency components, expected " + std::to_string(dim));
    Frequency neg(m.size());
    for (std::size_t a = 0; a < m.size(); ++a) neg[a] = -m[a];
    const std::complex<double> i(0.0, 1.0);
    if (name == "cos") {
      f.add(m, 0.5 * c);
      f.add(neg, 0.5 * c);
    } else if (name == "sin") {
      f.add(m, -0.5 * i * c);
      f.add(neg, 0.5 * i * c);
    } else if (name == "exp") {
      f.add(m, c);
    } else {
      throw InvalidSpec("unknown function '" + std::string(name) + "' in '" + std::string(term) + "'");
    }
  }
  return f;
}

std::string format_trig_poly(const FourierObservable& f) {
  if (f.empty()) return "0";
  std::string out;
  char buf[96];
  for (const auto& [m, c] : f.terms()) {
    if (!out.empty()) out += "; ";
    std::snprintf(buf, sizeof buf, "(%.17g,%.17g)*exp(", c.real() + 0.0, c.imag() + 0.0);  // no -0
    out += buf;
    for (std::size_t a = 0; a < m.size(); ++a) {
      if (a) out += ',';
      out += std::to_string(m[a]);
    }
    out += ')';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Systems

void SkewProductSpec::validate() const {
  if (!(y > 0.0 && y < 1.0)) throw InvalidSpec("skew: rotation number y must lie in (0, 1)");
  if (b == 0) throw InvalidSpec("skew: b = 0 makes the character of the homomorphism trivial");
  if (k == 0) throw InvalidSpec("skew: character index k must be nonzero");
  if (eta_lift.dim() != 1) throw InvalidSpec("skew: eta_lift must be a function on T^1");
  if (!eta_lift.is_real_valued()) throw InvalidSpec("skew: eta_lift must be real-valued");
}

void FurstenbergSpec::validate() const {
  if (d < 2 || d > 4) throw InvalidSpec("furstenberg: d must be in [2, 4]");
  if (!std::isfinite(y)) throw InvalidSpec("furstenberg: y must be finite");
  if (static_cast<int>(b.size()) != d) throw InvalidSpec("furstenberg: b must have d rows");
  for (int l = 0; l < d; ++l) {
    if (static_cast<int>(b[l].size()) != d) throw InvalidSpec("furstenberg: b must be d x d");
    for (int i = l; i < d; ++i)
      if (b[l][i] != 0) throw InvalidSpec("furstenberg: b must be strictly lower triangular");
    if (l >= 1 && b[l][l - 1] == 0)
      throw InvalidSpec("furstenberg: subdiagonal entry b_{" + std::to_string(l + 1) + "," + std::to_string(l) +
                        "} must be nonzero");
  }
  if (static_cast<int>(h.size()) != d - 1) throw InvalidSpec("furstenberg: need d - 1 perturbations h");
  for (int i = 0; i < d - 1; ++i) {
    if (h[i].dim() != i + 1) throw InvalidSpec("furstenberg: h_" + std::to_string(i + 1) + " must live on T^" +
                                               std::to_string(i + 1));
    if (!h[i].is_real_valued()) throw InvalidSpec("furstenberg: h_" + std::to_string(i + 1) + " must be real");
  }
  if (j < 2 || j > d) throw InvalidSpec("furstenberg: active index j must be in [2, d]");
  if (k == 0) throw InvalidSpec("furstenberg: character index k must be nonzero");
}

std::string describe(const MapSystem& s) {
  char buf[128];
  if (const auto* sk = std::get_if<SkewProductSpec>(&s)) {
    std::snprintf(buf, sizeof buf, "skew product y=%.17g b=%d k=%d eta_lift=", sk->y, sk->b, sk->k);
    return buf + format_trig_poly(sk->eta_lift);
  }
  if (const auto* fu = std::get_if<FurstenbergSpec>(&s)) {
    std::snprintf(buf, sizeof buf, "furstenberg d=%d y=%.17g j=%d k=%d", fu->d, fu->y, fu->j, fu->k);
    std::string out = buf;
    for (int i = 0; i < fu->d - 1; ++i) out += " h" + std::to_string(i + 1) + "=" + format_trig_poly(fu->h[i]);
    return out;
  }
  const auto& ro = std::get<RotationControl>(s);
  std::snprintf(buf, sizeof buf, "rotation control y=%.17g", ro.y);
  return buf;
}

TorusPoint furstenberg_apply(const FurstenbergSpec& spec, const TorusPoint& x) {
  if (static_cast<int>(x.coords.size()) != spec.d)
    throw DimensionMismatch("point on T^" + std::to_string(x.coords.size()) + " for d = " + std::to_string(spec.d));
  TorusPoint out{x.coords};
  out.coords[0] = frac(x.coords[0] + spec.y);
  for (int l = 1; l < spec.d; ++l) {
    double v = x.coords[l];
    for (int i = 0; i < l; ++i) v += spec.b[l][i] * x.coords[i];
    v += spec.h[l - 1](std::span<const double>(x.coords.data(), static_cast<std::size_t>(l))).real();
    out.coords[l] = frac(v);
  }
  return out;
}

TorusPoint furstenberg_inverse(const FurstenbergSpec& spec, const TorusPoint& x) {
  if (static_cast<int>(x.coords.size()) != spec.d)
    throw DimensionMismatch("point on T^" + std::to_string(x.coords.size()) + " for d = " + std::to_string(spec.d));
  TorusPoint out{x.coords};
  out.coords[0] = frac(x.coords[0] - spec.y);
  for (int l = 1; l < spec.d; ++l) {
    double v = x.coords[l];
    for (int i = 0; i < l; ++i) v -= spec.b[l][i] * out.coords[i];
    v -= spec.h[l - 1](std::span<const double>(out.coords.data(), static_cast<std::size_t>(l))).real();
    out.coords[l] = frac(v);
  }
  return out;
}

ActiveMap::ActiveMap(const MapSystem& system) {
  if (const auto* sk = std::get_if<SkewProductSpec>(&system)) {
    sk->validate();
    m_ = 1;
    k_ = sk->k;
    y_ = sk->y;
    phase_lin_ = {static_cast<double>(sk->b)};
    phase_pert_ = sk->eta_lift;
    lead_ = sk->b;
  } else if (const auto* fu = std::get_if<FurstenbergSpec>(&system)) {
    fu->validate();
    m_ = fu->j - 1;
    k_ = fu->k;
    y_ = fu->y;
    for (int r = 0; r < m_; ++r) phase_lin_.push_back(fu->b[fu->j - 1][r]);
    phase_pert_ = fu->h[fu->j - 2];
    lead_ = fu->b[fu->j - 1][fu->j - 2];
  } else {
    const auto& ro = std::get<RotationControl>(system);
    if (!std::isfinite(ro.y)) throw InvalidSpec("rotation: y must be finite");
    m_ = 1;
    k_ = 1;
    y_ = ro.y;
    phase_lin_ = {0.0};
    phase_pert_ = FourierObservable(1);
    lead_ = 0.0;
  }
  lin_.assign(static_cast<std::size_t>(m_), std::vector<double>(static_cast<std::size_t>(m_), 0.0));
  pert_.assign(static_cast<std::size_t>(m_), FourierObservable(1));
  if (const auto* fu = std::get_if<FurstenbergSpec>(&system)) {
    for (int a = 1; a < m_; ++a) {
      for (int r = 0; r < a; ++r) lin_[a][r] = fu->b[a][r];
      pert_[a] = fu->h[a - 1];
    }
  }
}

double ActiveMap::shift(int axis, std::span<const double> x) const {
  if (axis == 0) return y_;
  double s = 0.0;
  for (int r = 0; r < axis; ++r) s += lin_[axis][r] * x[r];
  if (!pert_[axis].empty()) s += pert_[axis](x.first(static_cast<std::size_t>(axis))).real();
  return s;
}

void ActiveMap::forward(std::span<double> x) const {
  for (int a = m_ - 1; a >= 0; --a) x[a] = frac(x[a] + shift(a, x));
}

void ActiveMap::backward(std::span<double> x) const {
  for (int a = 0; a < m_; ++a) x[a] = frac(x[a] - shift(a, x));
}

double ActiveMap::phase(std::span<const double> x) const {
  double p = 0.0;
  for (int r = 0; r < m_; ++r) p += phase_lin_[r] * x[r];
  if (!phase_pert_.empty()) p += phase_pert_(x).real();
  return p;
}

namespace {

// sup |d f / dx_axis| <= 2 pi sum |c_m| |m_axis|
double gradient_bound(const FourierObservable& f, int axis) {
  double s = 0.0;
  for (const auto& [m, c] : f.terms()) s += kTwoPi * std::abs(c) * std::abs(m[axis]);
  return s;
}

}  // namespace

std::vector<std::vector<double>> ActiveMap::jacobian_bound() const {
  std::vector<std::vector<double>> A(static_cast<std::size_t>(m_), std::vector<double>(static_cast<std::size_t>(m_)));
  for (int a = 0; a < m_; ++a) {
    A[a][a] = 1.0;
    for (int r = 0; r < a; ++r) A[a][r] = std::abs(lin_[a][r]) + gradient_bound(pert_[a], r);
  }
  return A;
}

std::vector<double> ActiveMap::phase_gradient_bound() const {
  std::vector<double> g(static_cast<std::size_t>(m_));
  for (int r = 0; r < m_; ++r)
    g[r] = std::abs(phase_lin_[r]) + (phase_pert_.empty() ? 0.0 : gradient_bound(phase_pert_, r));
  return g;
}

std::complex<double> birkhoff_sum_map(const FourierObservable& f, const MapSystem& system, std::span<const double> x,
                                      long n, Direction direction) {
  if (n < 1) throw DomainError("Birkhoff sum needs n >= 1");
  const ActiveMap map(system);
  if (static_cast<int>(x.size()) != map.dim()) throw DimensionMismatch("point dimension differs from the active torus");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<std::complex<double>> values(static_cast<std::size_t>(n));
  for (long l = 0; l < n; ++l) {
    if (direction == Direction::forward)
      map.forward(cur);
    else
      map.backward(cur);
    values[static_cast<std::size_t>(l)] = f(cur);
  }
  return pairwise_sum(values) / static_cast<double>(n);
}

FourierObservable eta_tilde(const SkewProductSpec& spec) { return spec.eta_lift.scaled(kTwoPi * spec.k); }

// ---------------------------------------------------------------------------
// Grids

std::mutex& fftw_plan_mutex() {
  static std::mutex mu;
  return mu;
}

namespace {

struct LineFft {
  explicit LineFft(std::size_t n) : n_(n) {
    buf_ = static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * n));
    std::lock_guard lock(fftw_plan_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf_);
    fwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_1d(static_cast<int>(n), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~LineFft() {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  LineFft(const LineFft&) = delete;
  LineFft& operator=(const LineFft&) = delete;

  void forward() { fftw_execute(fwd_); }
  void backward() { fftw_execute(bwd_); }
  std::complex<double>& operator[](std::size_t i) { return buf_[i]; }
  // Signed frequency of FFT bin i.
  long freq(std::size_t i) const { return i <= n_ / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n_); }

  std::size_t n_;
  std::complex<double>* buf_;
  fftw_plan fwd_, bwd_;
};

// Visits every line along `axis`: f(start index, stride, coordinates of the slower axes).
template <class F>
void for_each_line(int dim, std::size_t n, int axis, F&& f) {
  std::size_t stride = 1;
  for (int a = axis + 1; a < dim; ++a) stride *= n;
  std::size_t outer_count = 1;
  for (int a = 0; a < axis; ++a) outer_count *= n;
  std::vector<double> coords(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t outer = 0; outer < outer_count; ++outer) {
    std::size_t rem = outer;
    for (int a = axis - 1; a >= 0; --a) {
      coords[a] = static_cast<double>(rem % n) / static_cast<double>(n);
      rem /= n;
    }
    for (std::size_t inner = 0; inner < stride; ++inner) f(outer * stride * n + inner, stride, coords);
  }
}

void check_grid(const TorusGrid& g) {
  if (g.log2 < 2 || g.log2 > 24) throw InvalidSpec("grid_log2 must be in [2, 24]");
  std::size_t total = 1;
  for (int a = 0; a < g.dim; ++a) total *= g.n_axis();
  if (total > (std::size_t{1} << 24)) throw InvalidSpec("grid exceeds 2^24 points");
  if (g.values.size() != total) throw DimensionMismatch("grid buffer size does not match its shape");
}

}  // namespace

TorusGrid TorusGrid::sample(const FourierObservable& f, int log2) {
  TorusGrid g;
  g.dim = f.dim();
  g.log2 = log2;
  const std::size_t n = g.n_axis();
  std::size_t total = 1;
  for (int a = 0; a < g.dim; ++a) total *= n;
  g.values.resize(total);
  std::vector<double> x(static_cast<std::size_t>(g.dim));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (int a = g.dim - 1; a >= 0; --a) {
      x[a] = static_cast<double>(rem % n) / static_cast<double>(n);
      rem /= n;
    }
    g.values[idx] = f(x);
  }
  check_grid(g);
  return g;
}

double TorusGrid::l2_norm() const {
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) sq[i] = std::norm(values[i]);
  return std::sqrt(pairwise_sum(sq) / static_cast<double>(values.size()));
}

double alias_fraction(const TorusGrid& g) {
  check_grid(g);
  const std::size_t n = g.n_axis();
  LineFft fft(n);
  double worst = 0.0;
  for (int axis = 0; axis < g.dim; ++axis) {
    double high = 0.0, total = 0.0;
    for_each_line(g.dim, n, axis, [&](std::size_t start, std::size_t stride, const std::vector<double>&) {
      for (std::size_t i = 0; i < n; ++i) fft[i] = g.values[start + i * stride];
      fft.forward();
      for (std::size_t i = 0; i < n; ++i) {
        const double e = std::norm(fft[i]);
        total += e;
        if (std::abs(fft.freq(i)) > static_cast<long>(n / 4)) high += e;
      }
    });
    if (total > 0.0) worst = std::max(worst, high / total);
  }
  return worst;
}

TorusGrid u_chi_apply(const MapSystem& system, const TorusGrid& psi) {
  const ActiveMap map(system);
  if (psi.dim != map.dim()) throw DimensionMismatch("grid dimension differs from the active torus");
  const double alias = alias_fraction(psi);
  if (alias > kAliasTolerance)
    throw GridTooCoarse("spectral energy fraction " + std::to_string(alias) + " above N/4 exceeds tolerance");

  TorusGrid out = psi;
  const std::size_t n = out.n_axis();
  const double inv_n = 1.0 / static_cast<double>(n);
  LineFft fft(n);
  for (int axis = 0; axis < out.dim; ++axis) {
    for_each_line(out.dim, n, axis, [&](std::size_t start, std::size_t stride, const std::vector<double>& coords) {
      const double s = map.shift(axis, coords);
      for (std::size_t i = 0; i < n; ++i) fft[i] = out.values[start + i * stride];
      fft.forward();
      for (std::size_t i = 0; i < n; ++i) {
        const double angle = kTwoPi * frac(static_cast<double>(fft.freq(i)) * s);
        fft[i] *= std::complex<double>(std::cos(angle), std::sin(angle)) * inv_n;
      }
      fft.backward();
      for (std::size_t i = 0; i < n; ++i) out.values[start + i * stride] = fft[i];
    });
  }
  std::vector<double> x(static_cast<std::size_t>(out.dim));
  for (std::size_t idx = 0; idx < out.values.size(); ++idx) {
    std::size_t rem = idx;
    for (int a = out.dim - 1; a >= 0; --a) {
      x[a] = static_cast<double>(rem % n) * inv_n;
      rem /= n;
    }
    const double angle = kTwoPi * frac(map.k() * map.phase(x));
    out.values[idx] *= std::complex<double>(std::cos(angle), std::sin(angle));
  }
  return out;
}

}  // namespace paraspec

namespace paraspec {

namespace {

// Tracks per-axis frequency bounds of the lag-n integrand incrementally.
class FrequencyTracker {
 public:
  FrequencyTracker(const ActiveMap& map, const FourierObservable& psi)
      : A_(map.jacobian_bound()), k_(std::abs(map.k())), m_(map.dim()) {
    grad_ = map.phase_gradient_bound();
    psi_bw_.resize(static_cast<std::size_t>(m_));
    for (int a = 0; a < m_; ++a) psi_bw_[a] = psi.bandwidth(a);
    psi_moved_ = psi_bw_;
    phase_sum_.assign(static_cast<std::size_t>(m_), 0.0);
  }

  // Advances from lag n to n + 1 and returns the bound at n + 1.
  std::vector<double> step() {
    for (int a = 0; a < m_; ++a) phase_sum_[a] += grad_[a];
    grad_ = times_a(grad_);
    psi_moved_ = times_a(psi_moved_);
    return current();
  }

  std::vector<double> current() const {
    std::vector<double> f(static_cast<std::size_t>(m_));
    for (int a = 0; a < m_; ++a) f[a] = k_ * phase_sum_[a] + psi_moved_[a] + psi_bw_[a];
    return f;
  }

 private:
  // Row vector times A.
  std::vector<double> times_a(const std::vector<double>& v) const {
    std::vector<double> out(static_cast<std::size_t>(m_), 0.0);
    for (int r = 0; r < m_; ++r)
      for (int c = 0; c < m_; ++c) out[c] += v[r] * A_[r][c];
    return out;
  }

  std::vector<std::vector<double>> A_;
  double k_;
  int m_;
  std::vector<double> grad_, psi_bw_, psi_moved_, phase_sum_;
};

constexpr std::size_t kChunkPoints = 1024;

}  // namespace

std::vector<double> lag_frequency_bound(const MapSystem& system, const FourierObservable& psi, long n) {
  const ActiveMap map(system);
  FrequencyTracker tracker(map, psi);
  std::vector<double> f = tracker.current();
  for (long l = 0; l < n; ++l) f = tracker.step();
  return f;
}

CorrelationSeries correlation_map(const MapSystem& system, const FourierObservable& psi, long N, int grid_log2,
                                  const CorrelationMapOptions& opt) {
  const ActiveMap map(system);
  const int m = map.dim();
  if (psi.dim() != m) throw DimensionMismatch("observable lives on T^" + std::to_string(psi.dim()) +
                                              ", operator acts on T^" + std::to_string(m));
  if (N < 0 || N > 65536) throw InvalidSpec("number of lags must be in [0, 65536]");
  if (grid_log2 < 2 || grid_log2 * m > 24) throw InvalidSpec("grid must have between 4 and 2^24 points");
  const std::size_t n_axis = std::size_t{1} << grid_log2;

  // Resolution check for every lag before any work.
  {
    FrequencyTracker tracker(map, psi);
    std::vector<double> f = tracker.current();
    for (long n = 0; n <= N; ++n) {
      if (n > 0) f = tracker.step();
      for (int a = 0; a < m; ++a) {
        if (2.0 * f[a] >= static_cast<double>(n_axis)) {
          throw GridTooCoarse("lag " + std::to_string(n) + " has frequency content ~" + std::to_string(f[a]) +
                                  " on axis " + std::to_string(a) + ", beyond what a grid of " +
                                  std::to_string(n_axis) + " points resolves at half resolution",
                              n);
        }
      }
    }
  }

  std::size_t total = 1;
  for (int a = 0; a < m; ++a) total *= n_axis;
  const std::size_t coarse_total = total >> m;
  const std::size_t n_chunks = (total + kChunkPoints - 1) / kChunkPoints;
  const long lags = N + 1;
  const long neg = opt.include_negative ? N : 0;
  const std::size_t width = static_cast<std::size_t>(lags + neg);

  bool psi_constant = true;
  for (int a = 0; a < m; ++a) psi_constant = psi_constant && psi.bandwidth(a) == 0;
  const std::complex<double> psi_const = psi.mean();
  const double k = map.k();

  // Per chunk: fine and coarse partial sums for slot 0..width-1 where slot
  // i < lags is lag i and slot lags + i is lag -(i + 1).
  std::vector<std::vector<std::complex<double>>> fine(n_chunks), coarse(n_chunks);
  parallel_for(n_chunks, opt.workers, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kChunkPoints;
    const std::size_t end = std::min(total, begin + kChunkPoints);
    const std::size_t len = end - begin;
    std::vector<double> start(len * m);
    std::vector<char> is_coarse(len);
    std::vector<std::complex<double>> psi0(len);
    for (std::size_t p = 0; p < len; ++p) {
      std::size_t rem = begin + p;
      bool even = true;
      for (int a = m - 1; a >= 0; --a) {
        const std::size_t digit = rem % n_axis;
        start[p * m + a] = static_cast<double>(digit) / static_cast<double>(n_axis);
        even = even && digit % 2 == 0;
        rem /= n_axis;
      }
      is_coarse[p] = even;
      psi0[p] = psi_constant ? psi_const : psi(std::span<const double>(&start[p * m], static_cast<std::size_t>(m)));
    }
    auto& f_out = fine[chunk];
    auto& c_out = coarse[chunk];
    f_out.assign(width, 0.0);
    c_out.assign(width, 0.0);
    std::vector<std::complex<double>> buf_f(len), buf_c;
    buf_c.reserve(len);

    auto reduce_slot = [&](std::size_t slot) {
      f_out[slot] = pairwise_sum(buf_f);
      c_out[slot] = pairwise_sum(buf_c);
    };

    // Lag 0.
    buf_c.clear();
    for (std::size_t p = 0; p < len; ++p) {
      buf_f[p] = std::norm(psi0[p]);
      if (is_coarse[p]) buf_c.push_back(buf_f[p]);
    }
    reduce_slot(0);

    for (int sign : {+1, -1}) {
      if (sign < 0 && neg == 0) break;
      std::vector<double> cur = start;
      std::vector<double> phi(len, 0.0);
      for (long n = 1; n <= N; ++n) {
        buf_c.clear();
        for (std::size_t p = 0; p < len; ++p) {
          std::span<double> x(&cur[p * m], static_cast<std::size_t>(m));
          if (sign > 0) {
            phi[p] = frac(phi[p] + map.phase(x));
            map.forward(x);
          } else {
            map.backward(x);
            phi[p] = frac(phi[p] + map.phase(x));
          }
          const double angle = sign * kTwoPi * frac(k * phi[p]);
          const std::complex<double> moved = psi_constant ? psi_const : psi(x);
          buf_f[p] = std::complex<double>(std::cos(angle), std::sin(angle)) * moved * std::conj(psi0[p]);
          if (is_coarse[p]) buf_c.push_back(buf_f[p]);
        }
        reduce_slot(sign > 0 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(lags + n - 1));
      }
    }
  });

  CorrelationSeries out;
  out.estimator.method = "quadrature";
  out.estimator.samples = static_cast<long>(total);
  out.estimator.grid_log2 = grid_log2;
  out.system_desc = describe(system);
  std::vector<std::complex<double>> col_f(n_chunks), col_c(n_chunks);
  std::vector<std::complex<double>> values(width);
  std::vector<double> errors(width);
  for (std::size_t slot = 0; slot < width; ++slot) {
    for (std::size_t c = 0; c < n_chunks; ++c) {
      col_f[c] = fine[c][slot];
      col_c[c] = coarse[c][slot];
    }
    const std::complex<double> vf = pairwise_sum(col_f) / static_cast<double>(total);
    const std::complex<double> vc = pairwise_sum(col_c) / static_cast<double>(coarse_total);
    values[slot] = vf;
    errors[slot] = std::abs(vf - vc);
  }
  for (long n = neg; n >= 1; --n) {
    out.times.push_back(static_cast<double>(-n));
    out.values.push_back(values[static_cast<std::size_t>(lags + n - 1)]);
    out.std_error.push_back(errors[static_cast<std::size_t>(lags + n - 1)]);
  }
  for (long n = 0; n <= N; ++n) {
    out.times.push_back(static_cast<double>(n));
    out.values.push_back(values[static_cast<std::size_t>(n)]);
    out.std_error.push_back(errors[static_cast<std::size_t>(n)]);
  }
  return out;
}

}  // namespace paraspec

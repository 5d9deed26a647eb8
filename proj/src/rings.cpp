#include "kfree/rings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace kfree {

FieldSpec FieldSpec::quadratic(i64 d) {
    FieldSpec f;
    f.kind = Kind::Quadratic;
    f.d = d;
    return f;
}

i64 FieldSpec::n() const {
    if (is_rational()) return 0;
    return t() == 1 ? (d - 1) / 4 : d;
}

i64 FieldSpec::disc() const {
    if (is_rational()) return 1;
    return t() == 1 ? d : 4 * d;
}

std::string FieldSpec::to_string() const {
    return is_rational() ? "Q" : "Q(sqrt " + std::to_string(d) + ")";
}

Coord field_mul(const FieldSpec& f, Coord x, Coord y) {
    if (f.is_rational()) return {narrow(static_cast<i128>(x.a) * y.a), 0};
    i128 bd = static_cast<i128>(x.b) * y.b;
    i128 a = static_cast<i128>(x.a) * y.a + bd * f.n();
    i128 b = static_cast<i128>(x.a) * y.b + static_cast<i128>(x.b) * y.a + bd * f.t();
    return {narrow(a), narrow(b)};
}

i64 field_norm(const FieldSpec& f, Coord x) {
    if (f.is_rational()) return x.a;
    i128 v = static_cast<i128>(x.a) * x.a + static_cast<i128>(f.t()) * x.a * x.b -
             static_cast<i128>(f.n()) * x.b * x.b;
    return narrow(v);
}

Coord field_conj(const FieldSpec& f, Coord x) {
    if (f.is_rational()) return x;
    return {x.a + f.t() * x.b, -x.b};
}

long double field_real_value(const FieldSpec& f, Coord x) {
    if (f.is_rational()) return static_cast<long double>(x.a);
    long double s = std::sqrt(static_cast<long double>(f.d));
    long double w = f.t() == 1 ? (1.0L + s) / 2.0L : s;
    return static_cast<long double>(x.a) + static_cast<long double>(x.b) * w;
}

Coord EtaleAlgebra::coord(const Elem& x, int c) const {
    int o = offset[c];
    return comps[c].is_rational() ? Coord{x[o], 0} : Coord{x[o], x[o + 1]};
}

void EtaleAlgebra::set_coord(Elem& x, int c, Coord v) const {
    int o = offset[c];
    x[o] = v.a;
    if (!comps[c].is_rational()) x[o + 1] = v.b;
}

Elem EtaleAlgebra::one() const {
    Elem x = zero();
    for (int o : offset) x[o] = 1;
    return x;
}

Elem EtaleAlgebra::from_int(i64 v) const {
    Elem x = zero();
    for (int o : offset) x[o] = v;
    return x;
}

Elem EtaleAlgebra::mul(const Elem& x, const Elem& y) const {
    Elem r = zero();
    for (int c = 0; c < size(); ++c) set_coord(r, c, field_mul(comps[c], coord(x, c), coord(y, c)));
    return r;
}

Elem EtaleAlgebra::add(const Elem& x, const Elem& y) const {
    Elem r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = narrow(static_cast<i128>(x[i]) + y[i]);
    return r;
}

Elem EtaleAlgebra::sub(const Elem& x, const Elem& y) const {
    Elem r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = narrow(static_cast<i128>(x[i]) - y[i]);
    return r;
}

Elem EtaleAlgebra::neg(const Elem& x) const {
    Elem r(x.size());
    for (size_t i = 0; i < x.size(); ++i) r[i] = -x[i];
    return r;
}

std::vector<i64> EtaleAlgebra::norms(const Elem& x) const {
    std::vector<i64> out;
    for (int c = 0; c < size(); ++c) out.push_back(field_norm(comps[c], coord(x, c)));
    return out;
}

std::string EtaleAlgebra::to_string() const {
    std::string s;
    for (int c = 0; c < size(); ++c) {
        if (c) s += " x ";
        s += comps[c].to_string();
    }
    return s;
}

std::string format_coord(const FieldSpec& f, Coord x) {
    if (f.is_rational() || x.b == 0) return std::to_string(x.a);
    std::string w = (x.b == 1 ? "" : x.b == -1 ? "-" : std::to_string(x.b) + "*");
    if (x.a == 0) return w + "w";
    std::string bs = x.b < 0 ? "-" + (x.b == -1 ? std::string() : std::to_string(-x.b) + "*")
                             : "+" + (x.b == 1 ? std::string() : std::to_string(x.b) + "*");
    return std::to_string(x.a) + bs + "w";
}

std::string EtaleAlgebra::format(const Elem& x) const {
    if (size() == 1) return format_coord(comps[0], coord(x, 0));
    std::string s = "[";
    for (int c = 0; c < size(); ++c) {
        if (c) s += ";";
        s += format_coord(comps[c], coord(x, c));
    }
    return s + "]";
}

i64 height(const Elem& x) {
    i64 h = 0;
    for (i64 v : x) h = std::max(h, v < 0 ? -v : v);
    return h;
}

const char* split_name(SplitKind s) {
    switch (s) {
    case SplitKind::Split: return "split";
    case SplitKind::Inert: return "inert";
    case SplitKind::Ramified: return "ramified";
    }
    return "?";
}

std::string PrimeIdeal::to_string() const {
    std::string s = "(" + std::to_string(p);
    if (!field.is_rational() && kind != SplitKind::Inert) s += ", w-" + std::to_string(root);
    s += ")";
    if (comp != 0) s += "@" + std::to_string(comp);
    return s;
}

EtaleAlgebra make_algebra(const std::vector<FieldSpec>& spec) {
    if (spec.empty()) throw Error(ErrorKind::InvalidArgument, "empty algebra");
    EtaleAlgebra K;
    for (const auto& f : spec) {
        if (!f.is_rational() && (f.d == 0 || f.d == 1 || !is_squarefree(f.d)))
            throw Error(ErrorKind::InvalidDiscriminant, std::to_string(f.d));
        K.offset.push_back(K.degree);
        K.degree += f.degree();
        K.comps.push_back(f);
    }
    return K;
}

namespace {

std::string strip(const std::string& s) {
    std::string r;
    for (char ch : s)
        if (!std::isspace(static_cast<unsigned char>(ch))) r += ch;
    return r;
}

i64 parse_int(const std::string& s) {
    if (s.empty()) throw Error(ErrorKind::Parse, "empty integer");
    size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (...) {
        throw Error(ErrorKind::Parse, "bad integer '" + s + "'");
    }
    if (pos != s.size()) throw Error(ErrorKind::Parse, "bad integer '" + s + "'");
    return v;
}

} // namespace

EtaleAlgebra parse_algebra(const std::string& text) {
    std::vector<FieldSpec> spec;
    std::string s = strip(text);
    // components are joined by 'x'; 'x' never occurs inside a component literal
    size_t start = 0;
    while (start <= s.size()) {
        size_t pos = s.find('x', start);
        std::string part = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (part == "Q") {
            spec.push_back(FieldSpec::rational());
        } else if (part == "Q(i)") {
            spec.push_back(FieldSpec::quadratic(-1));
        } else if (part.rfind("Q(sqrt", 0) == 0 && part.back() == ')') {
            std::string inner = part.substr(6, part.size() - 7);
            if (!inner.empty() && inner.front() == '(' && inner.back() == ')')
                inner = inner.substr(1, inner.size() - 2);
            spec.push_back(FieldSpec::quadratic(parse_int(inner)));
        } else {
            throw Error(ErrorKind::Parse, "bad algebra component '" + part + "'");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return make_algebra(spec);
}

Coord parse_coord(const FieldSpec& f, const std::string& text) {
    std::string s = strip(text);
    if (s.empty()) throw Error(ErrorKind::Parse, "empty element");
    Coord r;
    size_t i = 0;
    while (i < s.size()) {
        size_t j = i + 1;
        while (j < s.size() && s[j] != '+' && s[j] != '-') ++j;
        std::string term = s.substr(i, j - i);
        i = j;
        int sign = 1;
        if (term[0] == '+' || term[0] == '-') {
            sign = term[0] == '-' ? -1 : 1;
            term = term.substr(1);
        }
        if (!term.empty() && term.back() == 'w') {
            if (f.is_rational()) throw Error(ErrorKind::Parse, "w in a Q component");
            std::string c = term.substr(0, term.size() - 1);
            if (!c.empty() && c.back() == '*') c.pop_back();
            r.b += sign * (c.empty() ? 1 : parse_int(c));
        } else {
            r.a += sign * parse_int(term);
        }
    }
    return r;
}

Elem parse_elem(const EtaleAlgebra& K, const std::string& text) {
    std::string s = strip(text);
    Elem x = K.zero();
    if (K.size() == 1) {
        K.set_coord(x, 0, parse_coord(K.comps[0], s));
        return x;
    }
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw Error(ErrorKind::Parse, "product element must be written [x;y;...]");
    s = s.substr(1, s.size() - 2);
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ';')) parts.push_back(item);
    if (static_cast<int>(parts.size()) != K.size())
        throw Error(ErrorKind::ComponentMismatch, "element has wrong number of components");
    for (int c = 0; c < K.size(); ++c) K.set_coord(x, c, parse_coord(K.comps[c], parts[c]));
    return x;
}

namespace {

// Square root of a quadratic residue a mod an odd prime p.
i64 sqrt_mod(i64 a, i64 p) {
    a = mod(a, p);
    if (a == 0) return 0;
    if (p % 4 == 3) return pow_mod(a, (p + 1) / 4, p);
    i64 q = p - 1;
    int s = 0;
    while (q % 2 == 0) {
        q /= 2;
        ++s;
    }
    i64 z = 2;
    while (pow_mod(z, (p - 1) / 2, p) != p - 1) ++z;
    i64 m = s, c = pow_mod(z, q, p), t = pow_mod(a, q, p), r = pow_mod(a, (q + 1) / 2, p);
    while (t != 1) {
        i64 i = 0, tt = t;
        while (tt != 1) {
            tt = mul_mod(tt, tt, p);
            ++i;
        }
        i64 b = c;
        for (i64 j = 0; j < m - i - 1; ++j) b = mul_mod(b, b, p);
        m = i;
        c = mul_mod(b, b, p);
        t = mul_mod(t, c, p);
        r = mul_mod(r, b, p);
    }
    return r;
}

i64 minpoly(const FieldSpec& f, i64 x, i64 m) {
    return mod128(static_cast<i128>(x) * x - static_cast<i128>(f.t()) * x - f.n(), m);
}

i64 hensel_root(const FieldSpec& f, i64 r, i64 p, int k) {
    i64 pk = ipow(p, k);
    i64 R = mod(r, pk);
    for (int it = 0; it < k + 1; ++it) {
        i64 fx = minpoly(f, R, pk);
        if (fx == 0) break;
        i64 dfx = mod(2 * R - f.t(), pk);
        R = mod(R - mul_mod(fx, inv_mod(dfx, pk), pk), pk);
    }
    return R;
}

} // namespace

std::vector<PrimeIdeal> split_prime(const EtaleAlgebra& K, i64 p) {
    if (!is_prime(p)) throw Error(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
    std::vector<PrimeIdeal> out;
    for (int c = 0; c < K.size(); ++c) {
        const FieldSpec& f = K.comps[c];
        PrimeIdeal P;
        P.comp = c;
        P.field = f;
        P.p = p;
        if (f.is_rational()) {
            out.push_back(P);
            continue;
        }
        if (f.disc() % p == 0) {
            P.kind = SplitKind::Ramified;
            P.e = 2;
            P.root = p == 2 ? mod(f.n(), 2) : mul_mod(f.t(), inv_mod(2, p), p);
            out.push_back(P);
        } else if (p == 2) {
            // unramified at 2 forces d = 1 mod 4, min poly x^2 - x - (d-1)/4
            if (mod(f.d, 8) == 1) {
                P.root = 0;
                out.push_back(P);
                P.root = 1;
                out.push_back(P);
            } else {
                P.kind = SplitKind::Inert;
                P.f = 2;
                out.push_back(P);
            }
        } else if (pow_mod(f.disc(), (p - 1) / 2, p) == 1) {
            i64 s = sqrt_mod(f.disc(), p);
            i64 inv2 = inv_mod(2, p);
            i64 r1 = mul_mod(mod(f.t() + s, p), inv2, p);
            i64 r2 = mul_mod(mod(f.t() - s, p), inv2, p);
            if (r1 > r2) std::swap(r1, r2);
            P.root = r1;
            out.push_back(P);
            P.root = r2;
            out.push_back(P);
        } else {
            P.kind = SplitKind::Inert;
            P.f = 2;
            out.push_back(P);
        }
    }
    for (size_t i = 0; i < out.size(); ++i) out[i].slot = static_cast<int>(i);
    return out;
}

Modulus ideal_power(const PrimeIdeal& P, int k) {
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "exponent must be >= 1");
    Modulus m;
    m.prime = P;
    m.k = k;
    m.dim = P.field.degree();
    i64 p = P.p;
    if (P.field.is_rational()) {
        m.h11 = ipow(p, k);
    } else if (P.kind == SplitKind::Inert) {
        m.h11 = m.h22 = ipow(p, k);
    } else if (P.kind == SplitKind::Split) {
        m.h11 = ipow(p, k);
        m.h21 = mod(-hensel_root(P.field, P.root, p, k), m.h11);
    } else {
        i64 pm = ipow(p, k / 2);
        if (k % 2 == 0) {
            m.h11 = m.h22 = pm;
        } else {
            m.h11 = pm * p;
            m.h21 = pm * mod(-P.root, p);
            m.h22 = pm;
        }
    }
    m.norm = narrow(static_cast<i128>(m.h11) * m.h22);
    return m;
}

bool Modulus::contains(Coord x) const {
    if (dim == 1) return mod(x.a, h11) == 0;
    if (mod(x.b, h22) != 0) return false;
    i128 a = static_cast<i128>(x.a) - static_cast<i128>(x.b / h22) * h21;
    return mod128(a, h11) == 0;
}

Coord Modulus::reduce(Coord x) const {
    if (dim == 1) return {mod(x.a, h11), 0};
    i64 q = floor_div(x.b, h22);
    i64 b = x.b - q * h22;
    i128 a = static_cast<i128>(x.a) - static_cast<i128>(q) * h21;
    return {mod128(a, h11), b};
}

i64 Modulus::index(Coord x) const {
    Coord r = reduce(x);
    return r.a + h11 * r.b;
}

Elem reduce_mod(const Elem& xc, const Modulus& m) {
    if (static_cast<int>(xc.size()) != m.dim)
        throw Error(ErrorKind::ComponentMismatch, "element and modulus live in different components");
    Coord r = m.reduce({xc[0], m.dim == 2 ? xc[1] : 0});
    if (m.dim == 1) return {r.a};
    return {r.a, r.b};
}

int valuation(Coord x, const PrimeIdeal& P) {
    if (x.a == 0 && x.b == 0) throw Error(ErrorKind::InvalidArgument, "valuation of zero");
    int v = 0;
    while (ideal_power(P, v + 1).contains(x)) ++v;
    return v;
}

Elem AlgebraHom::apply(const Elem& x) const {
    Elem y = dst.zero();
    for (int j = 0; j < dst.size(); ++j) {
        int i = src_comp[j];
        Coord c = src.coord(x, i);
        Coord out;
        if (src.comps[i].is_rational()) {
            out = {c.a, 0};
        } else {
            const Coord& w = w_image[j];
            out = {narrow(static_cast<i128>(c.a) + static_cast<i128>(c.b) * w.a),
                   narrow(static_cast<i128>(c.b) * w.b)};
        }
        dst.set_coord(y, j, out);
    }
    return y;
}

bool AlgebraHom::is_isomorphism() const {
    if (src.size() != dst.size()) return false;
    std::vector<int> seen(src.size(), 0);
    for (int j = 0; j < dst.size(); ++j) {
        if (!(src.comps[src_comp[j]] == dst.comps[j])) return false;
        if (seen[src_comp[j]]++) return false;
    }
    return true;
}

std::vector<std::vector<i64>> AlgebraHom::matrix() const {
    std::vector<std::vector<i64>> m(dst.degree, std::vector<i64>(src.degree, 0));
    for (int col = 0; col < src.degree; ++col) {
        Elem e = src.zero();
        e[col] = 1;
        Elem y = apply(e);
        for (int row = 0; row < dst.degree; ++row) m[row][col] = y[row];
    }
    return m;
}

std::string AlgebraHom::to_string() const {
    std::string s;
    for (int j = 0; j < dst.size(); ++j) {
        if (j) s += ", ";
        int i = src_comp[j];
        s += std::to_string(i) + "->" + std::to_string(j);
        if (!src.comps[i].is_rational()) s += (w_image[j].b == 1 ? " id" : " conj");
    }
    return s;
}

std::vector<AlgebraHom> algebra_homs(const EtaleAlgebra& K, const EtaleAlgebra& L) {
    struct Opt {
        int i;
        Coord w;
    };
    std::vector<std::vector<Opt>> opts(L.size());
    for (int j = 0; j < L.size(); ++j) {
        std::vector<int> order;
        if (j < K.size()) order.push_back(j);
        for (int i = 0; i < K.size(); ++i)
            if (i != j) order.push_back(i);
        for (int i : order) {
            const FieldSpec& fk = K.comps[i];
            const FieldSpec& fl = L.comps[j];
            if (fk.is_rational()) {
                opts[j].push_back({i, {0, 0}});
            } else if (fk == fl) {
                opts[j].push_back({i, {0, 1}});
                opts[j].push_back({i, {fl.t(), -1}});
            }
        }
    }
    std::vector<AlgebraHom> out;
    std::vector<size_t> idx(L.size(), 0);
    for (const auto& o : opts)
        if (o.empty()) return out;
    while (true) {
        AlgebraHom h;
        h.src = K;
        h.dst = L;
        for (int j = 0; j < L.size(); ++j) {
            h.src_comp.push_back(opts[j][idx[j]].i);
            h.w_image.push_back(opts[j][idx[j]].w);
        }
        out.push_back(h);
        int j = L.size() - 1;
        while (j >= 0 && ++idx[j] == opts[j].size()) idx[j--] = 0;
        if (j < 0) break;
    }
    return out;
}

Coord fundamental_unit(const FieldSpec& f) {
    if (f.is_rational() || f.d < 0) throw Error(ErrorKind::InvalidArgument, "not a real quadratic field");
    long double w = field_real_value(f, {0, 1});
    for (i64 y = 1; y < 100000000; ++y) {
        std::optional<Coord> best;
        long double bestv = 0;
        for (int s : {-1, 1}) {
            // x^2 + t x y - n y^2 = s
            i128 D = static_cast<i128>(f.t()) * f.t() * y * y + 4 * (static_cast<i128>(f.n()) * y * y + s);
            if (D < 0) continue;
            i64 r = isqrt(narrow(D));
            if (static_cast<i128>(r) * r != D) continue;
            for (i64 sr : {r, -r}) {
                i64 num = -f.t() * y + sr;
                if (num % 2 != 0) continue;
                Coord c{num / 2, y};
                long double v = static_cast<long double>(c.a) + y * w;
                if (v > 1 && (!best || v < bestv)) {
                    best = c;
                    bestv = v;
                }
            }
        }
        if (best) return *best;
    }
    throw Error(ErrorKind::BudgetExceeded, "fundamental unit search");
}

namespace {

std::vector<Coord> component_units(const FieldSpec& f, i64 H, std::optional<Coord>& fund) {
    std::vector<Coord> out;
    auto push = [&](Coord c) {
        if (std::max(std::abs(c.a), std::abs(c.b)) <= H) out.push_back(c);
    };
    if (f.is_rational()) {
        push({1, 0});
        push({-1, 0});
        return out;
    }
    if (f.d < 0) {
        push({1, 0});
        push({-1, 0});
        if (f.d == -1) {
            push({0, 1});
            push({0, -1});
        } else if (f.d == -3) {
            push({0, 1});
            push({0, -1});
            push({-1, 1});
            push({1, -1});
        }
        return out;
    }
    Coord eps = fundamental_unit(f);
    fund = eps;
    i64 N = field_norm(f, eps);
    Coord inv = field_conj(f, eps);
    inv = {inv.a * N, inv.b * N};
    Coord up{1, 0}, down{1, 0};
    push({1, 0});
    push({-1, 0});
    for (int j = 1; j < 200; ++j) {
        up = field_mul(f, up, eps);
        down = field_mul(f, down, inv);
        bool any = false;
        for (Coord c : {down, up}) {
            if (std::max(std::abs(c.a), std::abs(c.b)) > H) continue;
            any = true;
            push(c);
            push({-c.a, -c.b});
        }
        if (!any) break;
    }
    return out;
}

} // namespace

UnitList units_up_to(const EtaleAlgebra& K, i64 H) {
    UnitList res;
    std::vector<std::vector<Coord>> per;
    for (const auto& f : K.comps) {
        std::optional<Coord> fund;
        per.push_back(component_units(f, H, fund));
        res.fundamental.push_back(fund);
    }
    std::vector<size_t> idx(K.size(), 0);
    for (const auto& v : per)
        if (v.empty()) return res;
    while (true) {
        Elem x = K.zero();
        for (int c = 0; c < K.size(); ++c) K.set_coord(x, c, per[c][idx[c]]);
        res.units.push_back(x);
        int c = K.size() - 1;
        while (c >= 0 && ++idx[c] == per[c].size()) idx[c--] = 0;
        if (c < 0) break;
    }
    return res;
}

} // namespace kfree

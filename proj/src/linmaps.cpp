#include "kfree/linmaps.hpp"

#include <algorithm>
#include <sstream>

namespace kfree {

// ---- maps ----

Elem ZLinearMap::apply(const Elem& x) const {
    if (static_cast<int>(x.size()) != src.degree) throw Error(ErrorKind::ComponentMismatch, "element size");
    Elem y(static_cast<size_t>(dst.degree), 0);
    for (int i = 0; i < dst.degree; ++i) {
        i128 s = 0;
        for (int j = 0; j < src.degree; ++j) s += static_cast<i128>(m[i][j]) * x[j];
        y[i] = narrow(s);
    }
    return y;
}

namespace {

i128 det128(std::vector<std::vector<i128>> a) {
    // fraction-free elimination (Bareiss)
    int n = static_cast<int>(a.size());
    i128 sign = 1, prev = 1;
    for (int c = 0; c < n; ++c) {
        int piv = c;
        while (piv < n && a[piv][c] == 0) ++piv;
        if (piv == n) return 0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            sign = -sign;
        }
        for (int i = c + 1; i < n; ++i) {
            for (int j = c + 1; j < n; ++j) a[i][j] = (a[i][j] * a[c][c] - a[i][c] * a[c][j]) / prev;
            a[i][c] = 0;
        }
        prev = a[c][c];
    }
    return sign * a[n - 1][n - 1];
}

} // namespace

i64 ZLinearMap::det() const {
    if (!square()) throw Error(ErrorKind::InvalidArgument, "determinant of a non-square map");
    std::vector<std::vector<i128>> a(m.size());
    for (size_t i = 0; i < m.size(); ++i) a[i].assign(m[i].begin(), m[i].end());
    return narrow(det128(a));
}

std::string ZLinearMap::to_string() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < m.size(); ++i) {
        os << (i ? ",[" : "[");
        for (size_t j = 0; j < m[i].size(); ++j) os << (j ? "," : "") << m[i][j];
        os << "]";
    }
    os << "]";
    return os.str();
}

ZLinearMap make_map(const EtaleAlgebra& K, const EtaleAlgebra& L, const IntMatrix& rows) {
    if (static_cast<int>(rows.size()) != L.degree)
        throw Error(ErrorKind::ComponentMismatch, "matrix needs " + std::to_string(L.degree) + " rows");
    for (const auto& r : rows)
        if (static_cast<int>(r.size()) != K.degree)
            throw Error(ErrorKind::ComponentMismatch, "matrix needs " + std::to_string(K.degree) + " columns");
    return {K, L, rows};
}

ZLinearMap identity_map(const EtaleAlgebra& K) {
    IntMatrix m(static_cast<size_t>(K.degree), std::vector<i64>(static_cast<size_t>(K.degree), 0));
    for (int i = 0; i < K.degree; ++i) m[i][i] = 1;
    return {K, K, m};
}

ZLinearMap hom_map(const AlgebraHom& tau) { return {tau.src, tau.dst, tau.matrix()}; }

ZLinearMap mult_map(const EtaleAlgebra& L, const Elem& eps) {
    IntMatrix m(static_cast<size_t>(L.degree), std::vector<i64>(static_cast<size_t>(L.degree), 0));
    for (int j = 0; j < L.degree; ++j) {
        Elem e = L.zero();
        e[j] = 1;
        Elem col = L.mul(eps, e);
        for (int i = 0; i < L.degree; ++i) m[i][j] = col[i];
    }
    return {L, L, m};
}

ZLinearMap compose(const ZLinearMap& outer, const ZLinearMap& inner) {
    if (!(outer.src == inner.dst)) throw Error(ErrorKind::ComponentMismatch, "maps do not compose");
    IntMatrix m(static_cast<size_t>(outer.dst.degree), std::vector<i64>(static_cast<size_t>(inner.src.degree), 0));
    for (int i = 0; i < outer.dst.degree; ++i)
        for (int j = 0; j < inner.src.degree; ++j) {
            i128 s = 0;
            for (int t = 0; t < outer.src.degree; ++t) s += static_cast<i128>(outer.m[i][t]) * inner.m[t][j];
            m[i][j] = narrow(s);
        }
    return {inner.src, outer.dst, m};
}

IntMatrix parse_matrix(const std::string& text) {
    std::string s;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == ']' && i + 1 < text.size() && text.find_first_not_of(" ,", i + 1) != std::string::npos &&
            text[text.find_first_not_of(" ,", i + 1)] == '[') {
            s += ';';
            i = text.find_first_not_of(" ,", i + 1);
            continue;
        }
        if (c == '[' || c == ']' || c == ' ') continue;
        s += c;
    }
    IntMatrix m;
    std::stringstream rows(s);
    std::string row;
    while (std::getline(rows, row, ';')) {
        std::vector<i64> r;
        std::stringstream cells(row);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                size_t used = 0;
                r.push_back(std::stoll(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw Error(ErrorKind::Parse, "bad matrix entry '" + cell + "'");
            }
        }
        m.push_back(r);
    }
    if (m.empty()) throw Error(ErrorKind::Parse, "empty matrix");
    for (const auto& r : m)
        if (r.size() != m[0].size()) throw Error(ErrorKind::Parse, "ragged matrix");
    return m;
}

// ---- lattices ----

namespace {

using Row = std::vector<i128>;

i128 ext_gcd128(i128 a, i128 b, i128& x, i128& y) {
    i128 x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        i128 q = a / b, r = a % b;
        a = b;
        b = r;
        i128 t = x0 - q * x1;
        x0 = x1;
        x1 = t;
        t = y0 - q * y1;
        y0 = y1;
        y1 = t;
    }
    if (a < 0) {
        a = -a;
        x0 = -x0;
        y0 = -y0;
    }
    x = x0;
    y = y0;
    return a;
}

i128 floor_div128(i128 a, i128 b) {
    i128 q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Clear column c below row r using unimodular row operations; row r keeps the gcd.
void clear_column(std::vector<Row>& rows, size_t r, size_t c) {
    for (size_t i = r + 1; i < rows.size(); ++i) {
        if (rows[i][c] == 0) continue;
        i128 a = rows[r][c], b = rows[i][c], x, y;
        i128 g = ext_gcd128(a, b, x, y);
        Row nr(rows[r].size()), ni(rows[r].size());
        for (size_t j = 0; j < nr.size(); ++j) {
            nr[j] = x * rows[r][j] + y * rows[i][j];
            ni[j] = (a / g) * rows[i][j] - (b / g) * rows[r][j];
        }
        rows[r] = std::move(nr);
        rows[i] = std::move(ni);
    }
}

// Upper-triangular HNF of a full-rank generating set of Z^n-sublattice.
std::vector<Row> hnf(std::vector<Row> rows, size_t n) {
    for (size_t c = 0; c < n; ++c) {
        size_t piv = c;
        while (piv < rows.size() && rows[piv][c] == 0) ++piv;
        if (piv == rows.size()) throw Error(ErrorKind::InvalidArgument, "lattice is not of full rank");
        std::swap(rows[piv], rows[c]);
        clear_column(rows, c, c);
        if (rows[c][c] < 0)
            for (auto& v : rows[c]) v = -v;
        for (size_t i = 0; i < c; ++i) {
            i128 q = floor_div128(rows[i][c], rows[c][c]);
            if (q != 0)
                for (size_t j = 0; j < n; ++j) rows[i][j] -= q * rows[c][j];
        }
    }
    rows.resize(n);
    return rows;
}

} // namespace

IntMatrix congruence_lattice(int n, const std::vector<Congruence>& cs) {
    std::vector<Row> basis(static_cast<size_t>(n), Row(static_cast<size_t>(n), 0));
    for (int i = 0; i < n; ++i) basis[i][i] = 1;
    for (const auto& c : cs) {
        if (static_cast<int>(c.form.size()) != n) throw Error(ErrorKind::ComponentMismatch, "congruence size");
        if (c.modulus < 1) throw Error(ErrorKind::InvalidArgument, "modulus must be positive");
        // y with sum y_j (form . v_j) = 0 mod D, from the rows [form . v_j | e_j] and [D | 0]
        std::vector<Row> g;
        for (int j = 0; j < n; ++j) {
            Row r(static_cast<size_t>(n + 1), 0);
            i128 s = 0;
            for (int t = 0; t < n; ++t) s += basis[j][t] * c.form[t];
            r[0] = s % c.modulus;
            r[j + 1] = 1;
            g.push_back(r);
        }
        Row last(static_cast<size_t>(n + 1), 0);
        last[0] = c.modulus;
        g.push_back(last);
        size_t piv = 0;
        while (piv < g.size() && g[piv][0] == 0) ++piv;
        std::swap(g[0], g[piv]);
        clear_column(g, 0, 0);
        std::vector<Row> next;
        for (size_t i = 1; i < g.size(); ++i) {
            Row v(static_cast<size_t>(n), 0);
            for (int j = 0; j < n; ++j)
                for (int t = 0; t < n; ++t) v[t] += g[i][j + 1] * basis[j][t];
            next.push_back(v);
        }
        basis = hnf(next, static_cast<size_t>(n));
    }
    IntMatrix out(static_cast<size_t>(n), std::vector<i64>(static_cast<size_t>(n)));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[i][j] = narrow(basis[i][j]);
    return out;
}

i64 lattice_index(const IntMatrix& h) {
    i128 d = 1;
    for (size_t i = 0; i < h.size(); ++i) d *= h[i][i];
    return narrow(d);
}

// ---- induced maps ----

Elem InducedMap::apply(const Elem& x) const {
    Elem y(m.size(), 0);
    for (size_t i = 0; i < m.size(); ++i) {
        i128 s = 0;
        for (size_t j = 0; j < x.size(); ++j) s += static_cast<i128>(m[i][j]) * x[j];
        y[i] = mod128(s, modulus);
    }
    return y;
}

std::vector<i64> InducedMap::table(i64 budget) const {
    int n = m.empty() ? 0 : static_cast<int>(m[0].size());
    i128 count = 1;
    for (int i = 0; i < n; ++i) {
        count *= modulus;
        if (count > budget) throw Error(ErrorKind::BudgetExceeded, "induced map table too large");
    }
    std::vector<i64> out(static_cast<size_t>(count));
    Elem x(static_cast<size_t>(n), 0);
    for (i64 idx = 0; idx < static_cast<i64>(count); ++idx) {
        i64 r = idx;
        for (auto& v : x) {
            v = r % modulus;
            r /= modulus;
        }
        Elem y = apply(x);
        i64 o = 0;
        for (size_t i = y.size(); i-- > 0;) o = o * modulus + y[i];
        out[idx] = o;
    }
    return out;
}

InducedMap induced_mod(const ZLinearMap& A, i64 p, int k) {
    if (!is_prime(p)) throw Error(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    InducedMap f;
    f.p = p;
    f.k = k;
    f.modulus = ipow(p, k);
    f.m = A.m;
    for (auto& r : f.m)
        for (auto& v : r) v = mod(v, f.modulus);
    f.bijective = A.square() && mod(A.det(), p) != 0;
    return f;
}

// ---- local conditions ----

namespace {

struct LocalData {
    PrimeIdeal prime;
    LocalSet set;
};

std::vector<LocalData> local_data(const SieveSpec& R, i64 p) {
    std::vector<LocalData> out;
    for (const auto& P : split_prime(R.K, p)) out.push_back({P, local_set(R, P)});
    return out;
}

// Congruences on x saying that rows `rows` of a map send x into mod's lattice.
void lattice_congruences(const IntMatrix& rows, int offset, const Modulus& M, std::vector<Congruence>& out) {
    const auto& ra = rows[offset];
    if (M.dim == 1) {
        out.push_back({ra, M.h11});
        return;
    }
    const auto& rb = rows[offset + 1];
    out.push_back({rb, M.h22});
    std::vector<i64> f(ra.size());
    for (size_t j = 0; j < ra.size(); ++j)
        f[j] = narrow(static_cast<i128>(M.h22) * ra[j] - static_cast<i128>(M.h21) * rb[j]);
    out.push_back({f, narrow(static_cast<i128>(M.h11) * M.h22)});
}

bool in_set(const EtaleAlgebra& K, const LocalData& d, const Elem& x) {
    return d.set.contains(K.coord(x, d.prime.comp));
}

Elem reduce_all(Elem x, i64 P) {
    for (auto& v : x) v = mod(v, P);
    return x;
}

LocalCheck exhaustive(const ZLinearMap& A, const std::vector<LocalData>& src, const std::vector<LocalData>& dst,
                      i64 P, i64 classes) {
    LocalCheck res;
    res.method = "exhaustive";
    int n = A.src.degree;
    Elem x(static_cast<size_t>(n), 0);
    for (i64 idx = 0; idx < classes; ++idx) {
        i64 r = idx;
        for (auto& v : x) {
            v = r % P;
            r /= P;
        }
        bool in_v = true;
        for (const auto& d : src) in_v = in_v && !in_set(A.src, d, x);
        if (!in_v) continue;
        Elem y = A.apply(x);
        for (const auto& d : dst)
            if (in_set(A.dst, d, y)) {
                res.holds = false;
                res.witness = x;
                return res;
            }
    }
    return res;
}

} // namespace

LocalCheck check_local_condition(const ZLinearMap& A, const SieveSpec& R, const SieveSpec& S, i64 p, i64 budget) {
    if (!(A.src == R.K) || !(A.dst == S.K))
        throw Error(ErrorKind::ComponentMismatch, "sieves do not match the map's algebras");
    if (!is_prime(p)) throw Error(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
    auto src = local_data(R, p), dst = local_data(S, p);
    // classes mod p^E determine membership in every local set above p
    i64 E = 1;
    bool structural = true;
    for (const auto* side : {&src, &dst})
        for (const auto& d : *side) {
            E = std::max<i64>(E, (d.set.mod.k + d.prime.e - 1) / d.prime.e);
            structural = structural && (d.set.count() == 0 || d.set.is_zero_class());
        }
    i64 P = ipow(p, static_cast<int>(E));
    int n = A.src.degree;
    i128 classes = 1;
    for (int i = 0; i < n; ++i) classes = std::min<i128>(classes * P, i128{1} << 62);

    if (classes <= 100000 || (!structural && classes <= budget)) {
        auto res = exhaustive(A, src, dst, P, static_cast<i64>(classes));
        res.exponent = E;
        return res;
    }
    if (!structural) throw Error(ErrorKind::BudgetExceeded, "too many residue classes for an exhaustive check");

    // V_p(K,R) is the complement of the union of the subgroups P^k; the
    // preimage of each Q^l must lie inside that union.
    LocalCheck res;
    res.method = "lattice";
    res.exponent = E;
    IntMatrix id = identity_map(A.src).m;
    std::vector<const LocalData*> subgroups;
    for (const auto& d : src)
        if (d.set.count() > 0) subgroups.push_back(&d);
    auto fail = [&](Elem x) {
        res.holds = false;
        res.witness = reduce_all(std::move(x), P);
        return res;
    };
    auto outside = [&](const Elem& x) {
        for (const auto* d : subgroups)
            if (in_set(A.src, *d, x)) return false;
        return true;
    };
    for (const auto& q : dst) {
        if (q.set.count() == 0) continue;
        std::vector<Congruence> cs;
        lattice_congruences(A.m, A.dst.offset[q.prime.comp], q.set.mod, cs);
        IntMatrix L = congruence_lattice(n, cs);
        if (subgroups.empty()) return fail(Elem(static_cast<size_t>(n), 0));
        std::vector<int> inside;
        for (size_t s = 0; s < subgroups.size(); ++s) {
            bool all = true;
            for (const auto& v : L) all = all && in_set(A.src, *subgroups[s], v);
            if (all) inside.push_back(static_cast<int>(s));
        }
        if (!inside.empty()) continue;
        if (subgroups.size() <= 2) {
            // a group is never the union of two proper subgroups
            Elem g1, g2;
            for (const auto& v : L)
                if (!in_set(A.src, *subgroups[0], v)) g1 = v;
            if (subgroups.size() == 1) return fail(g1);
            for (const auto& v : L)
                if (!in_set(A.src, *subgroups[1], v)) g2 = v;
            if (outside(g1)) return fail(g1);
            if (outside(g2)) return fail(g2);
            return fail(A.src.add(g1, g2));
        }
        // three or more subgroups: compare |union| with |L| by inclusion-exclusion
        i128 base = lattice_index(L);
        size_t t = subgroups.size();
        std::vector<i64> idx(size_t{1} << t, 0);
        i128 top = 0;
        for (size_t mask = 1; mask < idx.size(); ++mask) {
            std::vector<Congruence> cm = cs;
            for (size_t s = 0; s < t; ++s)
                if (mask >> s & 1)
                    lattice_congruences(id, A.src.offset[subgroups[s]->prime.comp], subgroups[s]->set.mod, cm);
            idx[mask] = lattice_index(congruence_lattice(n, cm));
            top = std::max<i128>(top, idx[mask]);
        }
        i128 sum = 0;
        for (size_t mask = 1; mask < idx.size(); ++mask)
            sum += (__builtin_popcountll(mask) % 2 ? 1 : -1) * (top / idx[mask]);
        if (sum == top / base) continue;
        // walk combinations of the basis until one avoids every subgroup
        Elem y(static_cast<size_t>(n), 0);
        for (i64 it = 0; it < budget; ++it) {
            i64 r = it;
            for (auto& v : y) {
                v = r % P;
                r /= P;
            }
            Elem x(static_cast<size_t>(n), 0);
            for (int j = 0; j < n; ++j)
                for (int c = 0; c < n; ++c) x[c] = mod128(static_cast<i128>(x[c]) + static_cast<i128>(y[j]) * L[j][c], P);
            if (outside(x)) return fail(x);
        }
        throw Error(ErrorKind::BudgetExceeded, "violating class not located within budget");
    }
    return res;
}

PrimeScan scan_primes(const ZLinearMap& A, const SieveSpec& R, const SieveSpec& S, i64 P, i64 budget) {
    PrimeScan out;
    for (i64 p : primes_up_to(P)) {
        ++out.checked;
        auto c = check_local_condition(A, R, S, p, budget);
        if (!c.holds) {
            out.prime = p;
            out.witness = c.witness;
            return out;
        }
    }
    return out;
}

// ---- monomial maps ----

std::optional<MonomialDecomposition> decompose_monomial(const ZLinearMap& A) {
    const EtaleAlgebra &K = A.src, &L = A.dst;
    Elem eps = A.apply(K.one());
    for (const auto& tau : algebra_homs(K, L)) {
        bool ok = true;
        for (int j = 0; j < K.degree && ok; ++j) {
            Elem e = K.zero();
            e[j] = 1;
            ok = A.apply(e) == L.mul(eps, tau.apply(e));
        }
        if (ok) return MonomialDecomposition{tau, eps};
    }
    return std::nullopt;
}

// ---- finite fields ----

namespace {

bool invertible_mod(IntMatrix a, i64 q) {
    int n = static_cast<int>(a.size());
    for (int c = 0; c < n; ++c) {
        int piv = c;
        while (piv < n && mod(a[piv][c], q) == 0) ++piv;
        if (piv == n) return false;
        std::swap(a[piv], a[c]);
        i64 inv = inv_mod(a[c][c], q);
        for (int i = c + 1; i < n; ++i) {
            i64 f = mod(a[i][c] * inv, q);
            for (int j = c; j < n; ++j) a[i][j] = mod(a[i][j] - f * a[c][j], q);
        }
    }
    return true;
}

} // namespace

std::vector<Preserver> preserver_scan(i64 q, int n, int m, i64 budget) {
    if (!is_prime(q) || q > 7) throw Error(ErrorKind::InvalidArgument, "q must be a prime <= 7");
    if (n < 1 || m < 1 || n > 3 || m > 3) throw Error(ErrorKind::InvalidArgument, "dimensions must be in 1..3");
    // the condition is row by row: r . x != 0 for every x in (F^x)^n
    std::vector<std::vector<i64>> all_rows, units;
    i64 rows_total = ipow(q, n), units_total = ipow(q - 1, n);
    for (i64 i = 0; i < rows_total; ++i) {
        std::vector<i64> r(static_cast<size_t>(n));
        i64 v = i;
        for (int j = n - 1; j >= 0; --j) {
            r[j] = v % q;
            v /= q;
        }
        all_rows.push_back(r);
    }
    for (i64 i = 0; i < units_total; ++i) {
        std::vector<i64> x(static_cast<size_t>(n));
        i64 v = i;
        for (int j = n - 1; j >= 0; --j) {
            x[j] = 1 + v % (q - 1);
            v /= q - 1;
        }
        units.push_back(x);
    }
    std::vector<std::vector<i64>> good;
    for (const auto& r : all_rows) {
        bool ok = true;
        for (const auto& x : units) {
            i64 s = 0;
            for (int j = 0; j < n; ++j) s += r[j] * x[j];
            if (s % q == 0) {
                ok = false;
                break;
            }
        }
        if (ok) good.push_back(r);
    }
    i128 count = 1;
    for (int i = 0; i < m; ++i) count *= static_cast<i128>(good.size());
    if (count > budget) throw Error(ErrorKind::BudgetExceeded, "too many candidate matrices");
    std::vector<Preserver> out;
    std::vector<size_t> pick(static_cast<size_t>(m), 0);
    for (i64 it = 0; it < static_cast<i64>(count); ++it) {
        i64 v = it;
        for (int i = m - 1; i >= 0; --i) {
            pick[i] = static_cast<size_t>(v % static_cast<i64>(good.size()));
            v /= static_cast<i64>(good.size());
        }
        IntMatrix a;
        for (size_t i : pick) a.push_back(good[i]);
        if (n == m && !invertible_mod(a, q)) continue;
        bool mono = true;
        for (const auto& r : a) mono = mono && std::count_if(r.begin(), r.end(), [](i64 e) { return e != 0; }) == 1;
        out.push_back({a, mono});
    }
    return out;
}

i64 cover_witness(i64 p, int k, const std::vector<i64>& x, const std::vector<i64>& a,
                  const std::vector<std::vector<i64>>& R) {
    if (!is_prime(p) || k < 1) throw Error(ErrorKind::InvalidArgument, "need a prime p and k >= 1");
    if (x.size() != a.size() || x.size() != R.size()) throw Error(ErrorKind::ComponentMismatch, "length mismatch");
    i64 pk = ipow(p, k);
    std::vector<std::vector<char>> bad(x.size(), std::vector<char>(static_cast<size_t>(pk), 0));
    i64 total = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (mod(x[i], p) == 0)
            throw Error(ErrorKind::PreconditionFailed, "coordinate " + std::to_string(i) + " of x is not a unit");
        for (i64 c : R[i]) {
            if (c < 0 || c >= pk) throw Error(ErrorKind::ClassOutOfRange, std::to_string(c) + " is not in [0, p^k)");
            if (!bad[i][c]) ++total;
            bad[i][c] = 1;
        }
    }
    if (total >= pk) throw Error(ErrorKind::PreconditionFailed, "the measures of the R_i sum to at least 1");
    for (i64 t = 0; t < pk; ++t) {
        bool ok = true;
        for (size_t i = 0; i < x.size() && ok; ++i)
            ok = !bad[i][mod128(static_cast<i128>(a[i]) + static_cast<i128>(t) * x[i], pk)];
        if (ok) return t;
    }
    throw Error(ErrorKind::NoWitness, "no t avoids every R_i");
}

UnitCheck check_unit_preservation(const ZLinearMap& A, i64 H) {
    for (const auto& f : A.src.comps)
        if (!f.real()) throw Error(ErrorKind::PreconditionFailed, "source must be totally real");
    UnitCheck res;
    for (const Elem& u : units_up_to(A.src, H).units) {
        ++res.tested;
        Elem y = A.apply(u);
        bool unit = true;
        for (i64 N : A.dst.norms(y)) unit = unit && (N == 1 || N == -1);
        if (!unit) {
            res.holds = false;
            res.unit = u;
            res.image = y;
            return res;
        }
    }
    return res;
}

} // namespace kfree

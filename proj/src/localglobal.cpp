#include "kfree/localglobal.hpp"

#include <algorithm>
#include <cstdlib>
#include <tuple>

namespace kfree {

std::vector<Elem> multiplier_shell(int n, i64 h) {
    std::vector<i64> order{0};
    for (i64 v = 1; v <= h; ++v) {
        order.push_back(v);
        order.push_back(-v);
    }
    std::vector<Elem> out;
    std::vector<size_t> pos(static_cast<size_t>(n), 0);
    while (true) {
        Elem z(static_cast<size_t>(n));
        i64 m = 0;
        for (int i = 0; i < n; ++i) {
            z[i] = order[pos[i]];
            m = std::max(m, std::abs(z[i]));
        }
        if (m == h) out.push_back(z);
        int i = n - 1;
        while (i >= 0 && pos[i] + 1 == order.size()) pos[i--] = 0;
        if (i < 0) break;
        ++pos[i];
    }
    return out;
}

namespace {

// a with a = t.a + ((b - t.b)/h22) h21 mod h11 for every coset, or nothing.
std::optional<std::pair<i64, i64>> solve_a(const std::vector<std::pair<Modulus, Coord>>& cs, i64 b, bool offset) {
    i64 r = 0, m = 1;
    for (const auto& [M, t] : cs) {
        i64 tb = offset ? t.b : 0, ta = offset ? t.a : 0;
        if (mod(b - tb, M.h22) != 0) return std::nullopt;
        i128 want = static_cast<i128>(ta) + static_cast<i128>((b - tb) / M.h22) * M.h21;
        auto c = crt(r, m, mod128(want, M.h11), M.h11);
        if (!c) return std::nullopt;
        std::tie(r, m) = *c;
    }
    return std::make_pair(r, m);
}

} // namespace

CosetLattice intersect_cosets(const FieldSpec& f, const std::vector<std::pair<Modulus, Coord>>& cosets) {
    CosetLattice L;
    L.dim = f.degree();
    for (const auto& [M, t] : cosets) {
        if (M.dim != L.dim) throw Error(ErrorKind::ComponentMismatch, "modulus of the wrong dimension");
        L.h11 = lcm(L.h11, M.h11);
    }
    if (L.dim == 1) {
        auto a = solve_a(cosets, 0, true);
        if (!a) throw Error(ErrorKind::InvalidConstraint, "incompatible congruences");
        L.base = {a->first, 0};
        return L;
    }
    i64 l22 = 1;
    for (const auto& c : cosets) l22 = lcm(l22, c.first.h22);
    for (i64 j = 1;; ++j) {
        i64 b = narrow(static_cast<i128>(j) * l22);
        if (auto a = solve_a(cosets, b, false)) {
            L.h22 = b;
            L.h21 = mod(a->first, L.h11);
            break;
        }
    }
    // b is pinned modulo l22 by the second coordinates alone
    i64 b0 = 0, m0 = 1;
    for (const auto& [M, t] : cosets) {
        auto c = crt(b0, m0, mod(t.b, M.h22), M.h22);
        if (!c) throw Error(ErrorKind::InvalidConstraint, "incompatible congruences");
        std::tie(b0, m0) = *c;
    }
    for (i64 b = b0; b < L.h22; b += l22)
        if (auto a = solve_a(cosets, b, true)) {
            L.base = {mod(a->first, L.h11), b};
            return L;
        }
    throw Error(ErrorKind::InvalidConstraint, "incompatible congruences");
}

SolveResult solve(const SieveSpec& R, const std::vector<CongruenceConstraint>& cs, const SolveOptions& opt) {
    if (!R.non_large) throw Error(ErrorKind::PreconditionFailed, "sieve is large, V(K,R) is empty");
    if (!R.tail.boundable() && !opt.allow_unboundable)
        throw Error(ErrorKind::TailNotBoundable,
                    "tail " + R.tail.to_string(R.K) + " is not contained in T + P^2 for a finite T");
    const EtaleAlgebra& K = R.K;
    std::vector<std::vector<std::pair<Modulus, Coord>>> per(static_cast<size_t>(K.size()));
    std::vector<PrimeIdeal> seen;
    for (const auto& c : cs) {
        const PrimeIdeal& P = c.prime;
        if (P.comp < 0 || P.comp >= K.size() || !(K.comps[P.comp] == P.field))
            throw Error(ErrorKind::ComponentMismatch, "constraint prime " + P.to_string() + " is not a prime of K");
        if (std::find(seen.begin(), seen.end(), P) != seen.end())
            throw Error(ErrorKind::InvalidConstraint, "two constraints at " + P.to_string());
        seen.push_back(P);
        Modulus m = ideal_power(P, c.k);
        Coord t = m.reduce(c.target);
        if (local_set(R, P).contains(t))
            throw Error(ErrorKind::InvalidConstraint,
                        format_coord(P.field, t) + " lies in the local set at " + P.to_string());
        per[P.comp].emplace_back(m, t);
    }

    SolveResult res;
    res.base = K.zero();
    std::vector<CosetLattice> lat;
    for (int c = 0; c < K.size(); ++c) {
        lat.push_back(intersect_cosets(K.comps[c], per[c]));
        K.set_coord(res.base, c, lat.back().base);
    }
    for (i64 h = 0; h <= opt.bound; ++h) {
        for (const Elem& z : multiplier_shell(K.degree, h)) {
            Elem y = res.base;
            for (int c = 0; c < K.size(); ++c) {
                const auto& L = lat[c];
                int o = K.offset[c];
                if (L.dim == 1) {
                    y[o] += z[o] * L.h11;
                } else {
                    y[o] += z[o] * L.h11 + z[o + 1] * L.h21;
                    y[o + 1] += z[o + 1] * L.h22;
                }
            }
            ++res.tried;
            if (std::find(opt.skip.begin(), opt.skip.end(), y) != opt.skip.end()) continue;
            if (is_member(R, y)) {
                res.found = true;
                res.y = y;
                res.multiplier = z;
                return res;
            }
        }
    }
    return res;
}

Elem SurjectivityReport::class_rep(i64 idx) const {
    Elem c(static_cast<size_t>(K.degree));
    for (auto& v : c) {
        v = idx % pk;
        idx /= pk;
    }
    return c;
}

std::optional<Elem> SurjectivityReport::witness(i64 idx) const {
    std::uint8_t s = status[static_cast<size_t>(idx)];
    if (s == kExcluded || s == kMissing) return std::nullopt;
    Elem y = class_rep(idx);
    for (size_t i = 0; i < y.size(); ++i) y[i] += pk * multipliers[s][i];
    return y;
}

namespace {

// Calls f(idx) for every class c in [0, P)^dim with c in s + m.
template <class F>
void mark_coset(const Modulus& m, Coord s, i64 P, F&& f) {
    if (m.dim == 1) {
        for (i64 a = mod(s.a, m.h11); a < P; a += m.h11) f(a);
        return;
    }
    for (i64 b = mod(s.b, m.h22); b < P; b += m.h22) {
        i64 j = (b - s.b) / m.h22;
        i64 a0 = mod128(static_cast<i128>(s.a) + static_cast<i128>(j) * m.h21, m.h11);
        for (i64 a = a0; a < P; a += m.h11) f(a + P * b);
    }
}

void surjectivity_kernel(SurjectivityReport& rep) {
    const FieldSpec& f = rep.K.comps[0];
    const i64 P = rep.pk;
    const int k = rep.k;
    for (const auto& Q : split_prime(rep.K, rep.p))
        mark_coset(ideal_power(Q, k), {0, 0}, P,
                   [&](i64 idx) { rep.status[idx] = SurjectivityReport::kExcluded; });
    std::vector<std::uint32_t> pending;
    for (i64 i = 0; i < rep.total; ++i)
        if (rep.status[i] != SurjectivityReport::kExcluded) pending.push_back(static_cast<std::uint32_t>(i));
    rep.local = static_cast<i64>(pending.size());

    std::vector<Modulus> sieve; // k-th powers of primes away from p, by increasing q
    i64 sieved_to = 1;
    std::vector<std::uint8_t> stamp(static_cast<size_t>(rep.total), 0);
    for (size_t r = 0; r < rep.multipliers.size() && !pending.empty(); ++r) {
        const Elem& z = rep.multipliers[r];
        i64 za = z[0], zb = f.degree() == 2 ? z[1] : 0;
        i128 A = static_cast<i128>(P) * (std::abs(za) + 1);
        i128 B = f.degree() == 2 ? static_cast<i128>(P) * (std::abs(zb) + 1) : 0;
        i128 nb = f.is_rational() ? A : A * A + std::abs(f.t()) * A * B + std::abs(f.n()) * B * B;
        i64 bound = narrow(nb);
        i64 qmax = iroot(bound, k);
        if (qmax > sieved_to) {
            for (i64 q : primes_up_to(qmax)) {
                if (q <= sieved_to || q == rep.p) continue;
                for (const auto& Q : split_prime(rep.K, q)) sieve.push_back(ideal_power(Q, k));
            }
            sieved_to = qmax;
        }
        const std::uint8_t mark = static_cast<std::uint8_t>(r + 1);
        Coord s{-P * za, -P * zb};
        for (const auto& m : sieve) {
            if (m.prime.p > qmax) break;
            if (m.norm > bound) continue;
            mark_coset(m, s, P, [&](i64 idx) { stamp[idx] = mark; });
        }
        size_t keep = 0;
        for (std::uint32_t idx : pending) {
            if (stamp[idx] == mark) {
                pending[keep++] = idx;
                continue;
            }
            rep.status[idx] = static_cast<std::uint8_t>(r);
            ++rep.witnessed;
            i64 a = idx % P + P * za, b = idx / P + P * zb;
            rep.max_height = std::max({rep.max_height, std::abs(a), std::abs(b)});
        }
        pending.resize(keep);
    }
}

void surjectivity_by_solve(SurjectivityReport& rep) {
    SieveSpec R = kfree_sieve(rep.K, rep.k);
    auto above = split_prime(rep.K, rep.p);
    SolveOptions opt;
    opt.bound = 0;
    for (i64 h = 0;; ++h) {
        i64 c = 0;
        for (i64 g = 0; g <= h; ++g) c += static_cast<i64>(multiplier_shell(rep.K.degree, g).size());
        if (c > static_cast<i64>(rep.multipliers.size())) break;
        opt.bound = h;
    }
    for (i64 idx = 0; idx < rep.total; ++idx) {
        Elem c = rep.class_rep(idx);
        std::vector<CongruenceConstraint> cs;
        bool excluded = false;
        for (const auto& Q : above) {
            Coord cc = rep.K.coord(c, Q.comp);
            if (ideal_power(Q, rep.k).contains(cc)) excluded = true;
            cs.push_back({Q, Q.e * rep.k, cc});
        }
        if (excluded) {
            rep.status[idx] = SurjectivityReport::kExcluded;
            continue;
        }
        ++rep.local;
        SolveResult s = solve(R, cs, opt);
        if (!s.found || s.tried > static_cast<i64>(rep.multipliers.size())) continue;
        rep.status[idx] = static_cast<std::uint8_t>(s.tried - 1);
        ++rep.witnessed;
        rep.max_height = std::max(rep.max_height, height(s.y));
    }
}

} // namespace

SurjectivityReport check_local_surjectivity(const EtaleAlgebra& K, int k, i64 p, i64 bound) {
    if (k < 2) throw Error(ErrorKind::InvalidArgument, "local surjectivity needs k >= 2");
    if (!is_prime(p)) throw Error(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
    SurjectivityReport rep;
    rep.K = K;
    rep.k = k;
    rep.p = p;
    rep.pk = ipow(p, k);
    rep.total = ipow(rep.pk, K.degree);
    if (rep.total > (i64{1} << 31)) throw Error(ErrorKind::BudgetExceeded, "too many residue classes");
    for (i64 h = 0; h <= bound; ++h)
        for (auto& z : multiplier_shell(K.degree, h))
            if (rep.multipliers.size() < SurjectivityReport::kMissing) rep.multipliers.push_back(z);
    rep.status.assign(static_cast<size_t>(rep.total), SurjectivityReport::kMissing);
    if (K.size() == 1)
        surjectivity_kernel(rep);
    else
        surjectivity_by_solve(rep);
    return rep;
}

} // namespace kfree

#include "kfree/shiftspace.hpp"

#include <algorithm>
#include <set>

namespace kfree {

Pattern make_pattern(std::vector<Elem> pts) {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

Pattern translate(const Pattern& X, const Elem& g) {
    Pattern out;
    out.reserve(X.size());
    for (const Elem& x : X) {
        if (x.size() != g.size()) throw Error(ErrorKind::ComponentMismatch, "translation of the wrong size");
        Elem y = x;
        for (size_t i = 0; i < y.size(); ++i) y[i] += g[i];
        out.push_back(std::move(y));
    }
    return make_pattern(std::move(out));
}

bool contains(const Pattern& X, const Elem& x) { return std::binary_search(X.begin(), X.end(), x); }

bool Box::contains(const Elem& x) const {
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
}

std::vector<Elem> Box::points() const {
    std::vector<Elem> out;
    for (size_t i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) return out;
    Elem x = lo;
    while (true) {
        out.push_back(x);
        int i = static_cast<int>(x.size()) - 1;
        while (i >= 0 && x[i] == hi[i]) {
            x[i] = lo[i];
            --i;
        }
        if (i < 0) return out;
        ++x[i];
    }
}

Box cube(int n, i64 lo, i64 hi) { return {Elem(static_cast<size_t>(n), lo), Elem(static_cast<size_t>(n), hi)}; }

namespace {

Coord sub(Coord x, Coord y) { return {x.a - y.a, x.b - y.b}; }

// Primes where a set of m points might meet every translate of R_P:
// the exceptions, and tail primes with m |R_P| >= Nm(P)^k.
struct Relevant {
    std::vector<std::pair<PrimeIdeal, LocalSet>> primes;
    i64 bound = 1;
};

Relevant relevant_primes(const SieveSpec& R, i64 m) {
    Relevant out;
    for (const auto& [P, L] : R.exceptions)
        if (L.count() > 0) out.primes.emplace_back(P, L);
    if (R.tail.kind != TailRule::Kind::Empty && m > 0) {
        i64 c = R.tail.kind == TailRule::Kind::KFree ? 1 : static_cast<i64>(R.tail.residues.size());
        i128 lim = static_cast<i128>(m) * c;
        for (i64 p : small_primes()) {
            i128 pk = 1;
            for (int i = 0; i < R.tail.k && pk <= lim; ++i) pk *= p;
            if (pk > lim) break;
            out.bound = p;
            for (const auto& P : split_prime(R.K, p)) {
                if (R.exception(P)) continue;
                LocalSet L = local_set(R, P);
                if (static_cast<i128>(m) * L.count() >= L.mod.norm) out.primes.emplace_back(P, L);
            }
        }
    }
    std::sort(out.primes.begin(), out.primes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

// Classes delta with x in delta + L.
std::vector<i64> covered(const EtaleAlgebra& K, const PrimeIdeal& P, const LocalSet& L, const Elem& x) {
    Coord xc = K.coord(x, P.comp);
    std::vector<i64> out;
    out.reserve(L.classes.size());
    for (i64 c : L.classes) out.push_back(L.mod.index(sub(xc, L.mod.from_index(c))));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Depth-first walk over admissible subsets; relies on heredity to prune.
class AdmissibleWalk {
  public:
    AdmissibleWalk(const SieveSpec& R, const std::vector<Elem>& pts) : pts_(pts) {
        Relevant rel = relevant_primes(R, static_cast<i64>(pts.size()));
        for (const auto& [P, L] : rel.primes) {
            norm_.push_back(L.mod.norm);
            count_.emplace_back(static_cast<size_t>(L.mod.norm), 0);
            used_.push_back(0);
            std::vector<std::vector<i64>> cov;
            for (const Elem& x : pts) cov.push_back(covered(R.K, P, L, x));
            cover_.push_back(std::move(cov));
        }
    }

    template <class F>
    void run(F&& visit) {
        std::vector<int> chosen;
        walk(0, chosen, visit);
    }

  private:
    bool add(int i) {
        bool ok = true;
        for (size_t j = 0; j < norm_.size(); ++j)
            for (i64 c : cover_[j][i])
                if (count_[j][c]++ == 0 && ++used_[j] == norm_[j]) ok = false;
        return ok;
    }
    void remove(int i) {
        for (size_t j = 0; j < norm_.size(); ++j)
            for (i64 c : cover_[j][i])
                if (--count_[j][c] == 0) --used_[j];
    }
    template <class F>
    void walk(int start, std::vector<int>& chosen, F& visit) {
        visit(chosen);
        for (int i = start; i < static_cast<int>(pts_.size()); ++i) {
            if (add(i)) {
                chosen.push_back(i);
                walk(i + 1, chosen, visit);
                chosen.pop_back();
            }
            remove(i);
        }
    }

    const std::vector<Elem>& pts_;
    std::vector<i64> norm_;
    std::vector<std::vector<int>> count_;
    std::vector<i64> used_;
    std::vector<std::vector<std::vector<i64>>> cover_;
};

std::vector<u64> pattern_masks(const WindowCode& code) {
    std::vector<u64> masks;
    for (const Pattern& T : code.patterns) {
        u64 m = 0;
        for (const Elem& t : T)
            m |= u64(1) << (std::lower_bound(code.window.begin(), code.window.end(), t) - code.window.begin());
        masks.push_back(m);
    }
    std::sort(masks.begin(), masks.end());
    return masks;
}

bool fires(const WindowCode& code, const std::vector<u64>& masks, const Pattern& X, const Elem& x) {
    u64 m = 0;
    Elem y(x.size());
    for (size_t j = 0; j < code.window.size(); ++j) {
        for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] + code.window[j][i];
        if (contains(X, y)) m |= u64(1) << j;
    }
    return m != 0 && std::binary_search(masks.begin(), masks.end(), m);
}

} // namespace

AdmissibilityCertificate is_admissible(const SieveSpec& R, const Pattern& X) {
    AdmissibilityCertificate cert;
    for (const Elem& x : X)
        if (static_cast<int>(x.size()) != R.K.degree) throw Error(ErrorKind::ComponentMismatch, "pattern element size");
    Relevant rel = relevant_primes(R, static_cast<i64>(X.size()));
    cert.prime_bound = rel.bound;
    for (const auto& [P, L] : rel.primes) {
        auto d = avoiding_translate(R, X, P);
        if (!d) {
            cert.admissible = false;
            cert.violation = P;
            return cert;
        }
        cert.witnesses.push_back({P, L, *d});
    }
    return cert;
}

bool admissible(const SieveSpec& R, const Pattern& X) { return is_admissible(R, X).admissible; }

std::optional<Coord> avoiding_translate(const SieveSpec& R, const Pattern& X, const PrimeIdeal& P) {
    LocalSet L = local_set(R, P);
    std::vector<i64> hit;
    for (const Elem& x : X) {
        auto c = covered(R.K, P, L, x);
        hit.insert(hit.end(), c.begin(), c.end());
    }
    std::sort(hit.begin(), hit.end());
    hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
    if (static_cast<i64>(hit.size()) == L.mod.norm) return std::nullopt;
    i64 d = 0;
    while (d < static_cast<i64>(hit.size()) && hit[d] == d) ++d;
    return L.mod.from_index(d);
}

std::vector<Pattern> admissible_subsets(const SieveSpec& R, const std::vector<Elem>& pts, i64 budget) {
    std::vector<Elem> sorted = make_pattern(pts);
    std::vector<Pattern> out;
    AdmissibleWalk walk(R, sorted);
    walk.run([&](const std::vector<int>& chosen) {
        if (static_cast<i64>(out.size()) >= budget)
            throw Error(ErrorKind::BudgetExceeded, "more than " + std::to_string(budget) + " admissible subsets");
        Pattern X;
        for (int i : chosen) X.push_back(sorted[i]);
        out.push_back(std::move(X));
    });
    return out;
}

i64 count_admissible(const SieveSpec& R, i64 N, i64 budget) {
    if (N < 0) throw Error(ErrorKind::InvalidArgument, "box size must be >= 0");
    std::vector<Elem> pts = cube(R.K.degree, 0, N - 1).points();
    if (pts.size() >= 62 || (i64(1) << pts.size()) > budget)
        throw Error(ErrorKind::BudgetExceeded, "2^" + std::to_string(pts.size()) + " subsets exceed the budget");
    i64 n = 0;
    AdmissibleWalk walk(R, pts);
    walk.run([&](const std::vector<int>&) { ++n; });
    return n;
}

WindowCode make_code(const ZLinearMap& A, Pattern window, std::vector<Pattern> patterns) {
    WindowCode code{A, make_pattern(std::move(window)), {}};
    if (code.window.size() > 64) throw Error(ErrorKind::InvalidArgument, "window larger than 64 points");
    for (const Elem& w : code.window)
        if (static_cast<int>(w.size()) != A.src.degree)
            throw Error(ErrorKind::ComponentMismatch, "window element size");
    if (patterns.empty()) throw Error(ErrorKind::InvalidArgument, "empty pattern family");
    for (auto& T : patterns) {
        T = make_pattern(std::move(T));
        if (T.empty()) throw Error(ErrorKind::InvalidArgument, "empty pattern");
        for (const Elem& t : T)
            if (!contains(code.window, t)) throw Error(ErrorKind::InvalidArgument, "pattern leaves the window");
    }
    std::sort(patterns.begin(), patterns.end());
    patterns.erase(std::unique(patterns.begin(), patterns.end()), patterns.end());
    code.patterns = std::move(patterns);
    return code;
}

void check_code(const WindowCode& code, const SieveSpec& R) {
    if (!(code.A.src == R.K)) throw Error(ErrorKind::ComponentMismatch, "code and sieve live on different algebras");
    for (const Pattern& T : code.patterns)
        if (!admissible(R, T)) throw Error(ErrorKind::PreconditionFailed, "pattern is not admissible");
}

Pattern apply_block_code(const WindowCode& code, const Pattern& X, const Box& known) {
    auto masks = pattern_masks(code);
    Pattern out;
    bool any = false;
    for (const Elem& x : known.points()) {
        bool inside = true;
        for (const Elem& w : code.window) {
            Elem y = x;
            for (size_t i = 0; i < y.size(); ++i) y[i] += w[i];
            inside = inside && known.contains(y);
        }
        if (!inside) continue;
        any = true;
        if (fires(code, masks, X, x)) out.push_back(code.A.apply(x));
    }
    if (!any) throw Error(ErrorKind::RegionTooSmall, "no point of the region sees the whole window");
    return make_pattern(std::move(out));
}

Pattern apply_finite(const WindowCode& code, const Pattern& X) {
    auto masks = pattern_masks(code);
    std::vector<Elem> cand;
    for (const Elem& x : X)
        for (const Elem& w : code.window) {
            Elem y = x;
            for (size_t i = 0; i < y.size(); ++i) y[i] -= w[i];
            cand.push_back(std::move(y));
        }
    cand = make_pattern(std::move(cand));
    Pattern out;
    for (const Elem& x : cand)
        if (fires(code, masks, X, x)) out.push_back(code.A.apply(x));
    return make_pattern(std::move(out));
}

Pattern random_admissible(const SieveSpec& R, std::mt19937_64& rng, const RandomPatternOptions& opt) {
    const EtaleAlgebra& K = R.K;
    auto uniform = [&](i64 lo, i64 hi) { return std::uniform_int_distribution<i64>(lo, hi)(rng); };
    std::vector<Elem> ball = cube(K.degree, -opt.radius, opt.radius).points();

    int r = static_cast<int>(uniform(1, std::max(1, opt.max_pieces)));
    std::vector<Pattern> pieces;
    i64 total = 0;
    for (int i = 0; i < r; ++i) {
        Pattern T;
        for (int attempt = 0; attempt < 100 && T.empty(); ++attempt) {
            Pattern c;
            for (const Elem& x : ball)
                if (rng() & 1) c.push_back(x);
            if (!c.empty() && admissible(R, c)) T = c;
        }
        if (T.empty()) T = {K.zero()};
        total += static_cast<i64>(T.size());
        pieces.push_back(std::move(T));
    }

    Relevant rel = relevant_primes(R, total);
    std::vector<std::vector<CosetLattice>> lat(pieces.size());
    i64 h11 = 1;
    for (size_t i = 0; i < pieces.size(); ++i) {
        std::vector<std::vector<std::pair<Modulus, Coord>>> per(static_cast<size_t>(K.size()));
        for (const auto& [P, L] : rel.primes) {
            // x_i must avoid -T_i + R_P
            std::vector<i64> bad;
            for (const Elem& t : pieces[i]) {
                auto c = covered(K, P, L, t);
                bad.insert(bad.end(), c.begin(), c.end());
            }
            std::sort(bad.begin(), bad.end());
            bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
            i64 pick = uniform(0, L.mod.norm - 1);
            while (std::binary_search(bad.begin(), bad.end(), pick)) pick = (pick + 1) % L.mod.norm;
            // covered() gives t - c; the class to avoid is c - t
            per[P.comp].emplace_back(L.mod, L.mod.reduce({-L.mod.from_index(pick).a, -L.mod.from_index(pick).b}));
        }
        for (int c = 0; c < K.size(); ++c) lat[i].push_back(intersect_cosets(K.comps[c], per[c]));
        h11 = std::max(h11, lat[i][0].h11);
    }

    const i64 G = narrow(static_cast<i128>(h11) + opt.gap + 4 * opt.radius + 2);
    std::vector<Elem> out;
    for (size_t i = 0; i < pieces.size(); ++i) {
        Elem x = K.zero();
        for (int c = 0; c < K.size(); ++c) {
            const CosetLattice& L = lat[i][c];
            i64 z1 = L.dim == 2 ? uniform(-3, 3) : 0;
            i64 b = L.base.b + z1 * L.h22;
            i64 a0 = narrow(static_cast<i128>(L.base.a) + static_cast<i128>(z1) * L.h21);
            i64 z0;
            if (c == 0) {
                i64 target = narrow(static_cast<i128>(i) * G + uniform(0, opt.gap));
                z0 = -floor_div(a0 - target, L.h11);
            } else {
                z0 = uniform(-3, 3);
            }
            K.set_coord(x, c, {narrow(static_cast<i128>(a0) + static_cast<i128>(z0) * L.h11), b});
        }
        for (const Elem& t : pieces[i]) out.push_back(K.add(x, t));
    }
    return make_pattern(std::move(out));
}

IntertwinerReport verify_intertwiner(const WindowCode& code, const SieveSpec& R, const SieveSpec& S, int trials,
                                     unsigned long long seed) {
    if (!(code.A.src == R.K) || !(code.A.dst == S.K))
        throw Error(ErrorKind::ComponentMismatch, "code does not map K to L");
    std::mt19937_64 rng(seed);
    RandomPatternOptions opt;
    for (const Elem& w : code.window)
        for (i64 v : w) opt.radius = std::max(opt.radius, std::abs(v));
    IntertwinerReport rep;
    for (int t = 0; t < trials; ++t) {
        rep.trials = t + 1;
        Pattern X = random_admissible(R, rng, opt);
        Elem g(static_cast<size_t>(R.K.degree));
        for (auto& v : g) v = std::uniform_int_distribution<i64>(-50, 50)(rng);
        Pattern fX = apply_finite(code, X);
        std::string fail;
        if (!admissible(S, fX))
            fail = "image is not admissible";
        else if (apply_finite(code, translate(X, g)) != translate(fX, code.A.apply(g)))
            fail = "f(g + X) != A(g) + f(X)";
        if (!fail.empty()) {
            rep.passed = false;
            rep.failure = fail;
            rep.X = X;
            rep.g = g;
            return rep;
        }
    }
    return rep;
}

LocalSet lift(const LocalSet& L, int k) {
    if (k <= L.mod.k) return L;
    LocalSet out;
    out.mod = ideal_power(L.mod.prime, k);
    if (out.mod.norm > 50000000) throw Error(ErrorKind::BudgetExceeded, "lifted modulus too large");
    if (L.classes.empty()) return out;
    for (i64 i = 0; i < out.mod.norm; ++i)
        if (L.contains(out.mod.from_index(i))) out.classes.push_back(i);
    return out;
}

LocalSet derived_local_set(const SieveSpec& R, const PrimeIdeal& P, const std::vector<Pattern>& patterns) {
    if (patterns.empty()) throw Error(ErrorKind::InvalidArgument, "empty pattern family");
    LocalSet L = local_set(R, P);
    LocalSet out{L.mod, {}};
    bool first = true;
    for (const Pattern& T : patterns) {
        std::vector<i64> u;
        for (const Elem& t : T) {
            Coord tc = R.K.coord(t, P.comp);
            for (i64 c : L.classes) u.push_back(L.mod.index(sub(L.mod.from_index(c), tc)));
        }
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end()), u.end());
        if (first) {
            out.classes = u;
            first = false;
        } else {
            std::vector<i64> both;
            std::set_intersection(out.classes.begin(), out.classes.end(), u.begin(), u.end(),
                                  std::back_inserter(both));
            out.classes = both;
        }
    }
    return out;
}

std::optional<Coord> translate_subset(const LocalSet& S0, const LocalSet& R0) {
    if (!(S0.mod.prime == R0.mod.prime)) throw Error(ErrorKind::InvalidArgument, "local sets at different primes");
    int e = std::max(S0.mod.k, R0.mod.k);
    LocalSet S = lift(S0, e), R = lift(R0, e);
    const Modulus& m = S.mod;
    if (S.classes.empty()) return Coord{0, 0};
    if (R.classes.empty()) return std::nullopt;
    Coord s0 = m.from_index(S.classes[0]);
    std::optional<i64> best;
    for (i64 r : R.classes) {
        Coord d = m.reduce(sub(s0, m.from_index(r)));
        bool ok = true;
        for (i64 s : S.classes) ok = ok && R.contains(sub(m.from_index(s), d));
        i64 di = m.index(d);
        if (ok && (!best || di < *best)) best = di;
    }
    if (!best) return std::nullopt;
    return m.from_index(*best);
}

std::optional<Coord> translate_of(const LocalSet& S, const LocalSet& R) {
    if (static_cast<i128>(S.count()) * R.mod.norm != static_cast<i128>(R.count()) * S.mod.norm) return std::nullopt;
    return translate_subset(S, R);
}

const char* verdict_name(ConjugacyResult::Verdict v) {
    switch (v) {
    case ConjugacyResult::Verdict::Conjugate: return "conjugate";
    case ConjugacyResult::Verdict::NoWitnessUpToBound: return "no-witness-up-to-bound";
    case ConjugacyResult::Verdict::NotConjugate: return "not-conjugate";
    }
    return "";
}

namespace {

// tau(P): the prime of L above p containing the image of P.
PrimeIdeal image_prime(const ZLinearMap& T, const AlgebraHom& tau, const PrimeIdeal& P) {
    int j = -1;
    for (int i = 0; i < tau.dst.size(); ++i)
        if (tau.src_comp[i] == P.comp) j = i;
    Modulus m = ideal_power(P, 1);
    std::vector<Coord> gens{{m.h11, 0}};
    if (m.dim == 2) gens.push_back({m.h21, m.h22});
    for (const PrimeIdeal& Q : split_prime(tau.dst, P.p)) {
        if (Q.comp != j) continue;
        Modulus q = ideal_power(Q, 1);
        bool ok = true;
        for (Coord g : gens) {
            Elem x = tau.src.zero();
            tau.src.set_coord(x, P.comp, g);
            ok = ok && q.contains(tau.dst.coord(T.apply(x), j));
        }
        if (ok) return Q;
    }
    throw Error(ErrorKind::PreconditionFailed, "no image prime for " + P.to_string());
}

} // namespace

ConjugacyResult conjugacy_search(const SieveSpec& R, const SieveSpec& S, i64 H, i64 tail_cutoff) {
    if (!R.non_large || !R.cofinite || !S.non_large || !S.cofinite)
        throw Error(ErrorKind::PreconditionFailed, "conjugacy search needs non-large cofinite sieves");
    ConjugacyResult res;
    res.tail_exact = R.tail.kind == TailRule::Kind::KFree && S.tail.kind == TailRule::Kind::KFree &&
                     R.tail.k == S.tail.k;
    std::set<i64> ps;
    for (i64 p : primes_up_to(tail_cutoff)) ps.insert(p);
    for (const auto& e : R.exceptions) ps.insert(e.first.p);
    for (const auto& e : S.exceptions) ps.insert(e.first.p);
    res.checked.assign(ps.begin(), ps.end());

    std::vector<AlgebraHom> isos;
    for (auto& h : algebra_homs(R.K, S.K))
        if (h.is_isomorphism()) isos.push_back(h);
    if (isos.empty()) {
        res.verdict = ConjugacyResult::Verdict::NotConjugate;
        res.reason = "no algebra isomorphism " + R.K.to_string() + " -> " + S.K.to_string();
        return res;
    }
    std::vector<Elem> units = units_up_to(S.K, H).units;

    struct Site {
        PrimeIdeal P, Q;
        LocalSet r, s;
    };
    bool alive = false;
    for (const AlgebraHom& tau : isos) {
        ZLinearMap T = hom_map(tau);
        std::vector<Site> sites;
        std::string mismatch;
        for (i64 p : res.checked) {
            for (const PrimeIdeal& P : split_prime(R.K, p)) {
                PrimeIdeal Q = image_prime(T, tau, P);
                LocalSet r = local_set(R, P), s = local_set(S, Q);
                if (static_cast<i128>(r.count()) * s.mod.norm != static_cast<i128>(s.count()) * r.mod.norm) {
                    mismatch = "R and S have different measure at " + P.to_string() + " -> " + Q.to_string();
                    break;
                }
                int e = std::max(r.mod.k, s.mod.k);
                sites.push_back({P, Q, lift(r, e), lift(s, e)});
            }
            if (!mismatch.empty()) break;
        }
        if (!mismatch.empty()) {
            if (res.reason.empty()) res.reason = mismatch;
            continue;
        }
        alive = true;
        for (const Elem& eps : units) {
            ++res.tested;
            ZLinearMap A = compose(mult_map(S.K, eps), T);
            std::vector<std::pair<PrimeIdeal, Coord>> deltas;
            bool ok = true;
            for (const Site& st : sites) {
                LocalSet img{st.s.mod, {}};
                for (i64 c : st.r.classes) {
                    Elem x = R.K.zero();
                    R.K.set_coord(x, st.P.comp, st.r.mod.from_index(c));
                    img.classes.push_back(st.s.mod.index(S.K.coord(A.apply(x), st.Q.comp)));
                }
                std::sort(img.classes.begin(), img.classes.end());
                auto d = translate_of(st.s, img);
                if (!d) {
                    ok = false;
                    break;
                }
                deltas.emplace_back(st.Q, *d);
            }
            if (ok) {
                res.verdict = ConjugacyResult::Verdict::Conjugate;
                res.tau = tau;
                res.eps = eps;
                res.deltas = std::move(deltas);
                res.reason.clear();
                return res;
            }
        }
    }
    if (!alive) {
        res.verdict = ConjugacyResult::Verdict::NotConjugate;
    } else {
        res.verdict = ConjugacyResult::Verdict::NoWitnessUpToBound;
        res.reason = "no unit of height <= " + std::to_string(H) + " works";
    }
    return res;
}

std::vector<SymmetryCandidate> symmetry_scan(const SieveSpec& R, i64 W, i64 budget) {
    if (W < 0) throw Error(ErrorKind::InvalidArgument, "window radius must be >= 0");
    const EtaleAlgebra& K = R.K;
    const int n = K.degree;
    Pattern M = make_pattern(cube(n, -W, W).points());
    if (M.size() > 64) throw Error(ErrorKind::BudgetExceeded, "window larger than 64 points");
    std::vector<Pattern> subsets;
    for (auto& T : admissible_subsets(R, M, budget))
        if (!T.empty()) subsets.push_back(std::move(T));
    std::sort(subsets.begin(), subsets.end(), [](const Pattern& a, const Pattern& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });

    // Primes small enough to see the window, then one prime past every
    // difference of window points and tail residues.
    i64 spread = 0;
    for (const Elem& r : R.tail.residues)
        for (i64 v : r) spread = std::max(spread, std::abs(v));
    i64 B = 4 * W + 2 + 2 * spread;
    std::set<i64> ps;
    for (i64 p : primes_up_to(B)) ps.insert(p);
    i64 q = B + 1;
    while (!is_prime(q)) ++q;
    ps.insert(q);
    for (const auto& e : R.exceptions) ps.insert(e.first.p);

    struct Site {
        LocalSet L;
        std::vector<std::vector<i64>> shifted; // -T + R_P per subset
    };
    std::vector<Site> sites;
    for (i64 p : ps)
        for (const PrimeIdeal& P : split_prime(K, p)) {
            Site s{local_set(R, P), {}};
            if (s.L.classes.empty()) continue;
            for (const Pattern& T : subsets) s.shifted.push_back(derived_local_set(R, P, {T}).classes);
            sites.push_back(std::move(s));
        }

    // R_P must fit in a translate of R'_P; R'_P only shrinks as T's are added
    auto fits = [&](const Site& s, const std::vector<i64>& inter) {
        return translate_subset(s.L, LocalSet{s.L.mod, inter}).has_value();
    };

    Box D = n == 1 ? cube(1, -2 * W, 2 * W) : cube(n, -W, W);
    std::vector<Pattern> domain = admissible_subsets(R, D.points(), budget);
    ZLinearMap id = identity_map(K);

    std::vector<SymmetryCandidate> out;
    i64 nodes = 0;
    std::vector<int> family;
    std::vector<std::vector<std::vector<i64>>> stack; // per depth, per site intersection

    auto leaf = [&]() {
        bool single = false;
        for (int i : family) single = single || subsets[i].size() == 1;
        if (!single) return;
        std::vector<Pattern> pats;
        for (int i : family) pats.push_back(subsets[i]);
        WindowCode code = make_code(id, M, pats);
        std::set<Pattern> images;
        for (const Pattern& X : domain) {
            Pattern fX = apply_finite(code, X);
            if (!admissible(R, fX) || !images.insert(fX).second) return;
        }
        SymmetryCandidate cand{code, std::nullopt};
        for (const Elem& t : M) {
            std::vector<Pattern> all;
            for (const Pattern& T : subsets)
                if (contains(T, t)) all.push_back(T);
            std::sort(all.begin(), all.end());
            if (all == code.patterns) cand.translation = K.neg(t);
        }
        out.push_back(std::move(cand));
    };

    auto dfs = [&](auto&& self, size_t i, const std::vector<std::vector<i64>>& inter) -> void {
        if (++nodes > budget) throw Error(ErrorKind::BudgetExceeded, "symmetry scan exceeded its budget");
        if (i == subsets.size()) {
            if (!family.empty()) leaf();
            return;
        }
        // include subsets[i]
        std::vector<std::vector<i64>> next(sites.size());
        bool ok = true;
        for (size_t s = 0; s < sites.size() && ok; ++s) {
            if (family.empty()) {
                next[s] = sites[s].shifted[i];
            } else {
                std::set_intersection(inter[s].begin(), inter[s].end(), sites[s].shifted[i].begin(),
                                      sites[s].shifted[i].end(), std::back_inserter(next[s]));
            }
            ok = fits(sites[s], next[s]);
        }
        if (ok) {
            family.push_back(static_cast<int>(i));
            self(self, i + 1, next);
            family.pop_back();
        }
        self(self, i + 1, inter);
    };
    dfs(dfs, 0, std::vector<std::vector<i64>>(sites.size()));
    return out;
}

OrbitResult orbit_approximation(const EtaleAlgebra& K, int k, const Pattern& X, const Pattern& M0, i64 bound) {
    if (k < 2) throw Error(ErrorKind::InvalidArgument, "orbit approximation needs k >= 2");
    Pattern M = make_pattern(M0);
    Pattern Xp;
    for (const Elem& x : M)
        if (contains(X, x)) Xp.push_back(x);
    if (!admissible(kfree_sieve(K, k), Xp))
        throw Error(ErrorKind::PreconditionFailed, "X is not admissible for the k-free sieve");

    // Delta avoids -X' + P^k everywhere
    std::vector<Elem> res;
    for (const Elem& x : Xp) res.push_back(K.neg(x));
    SieveSpec Rp = build_sieve(K, TailRule::residue_classes(k, res), {});

    // each excluded y gets its own prime P with y not in X' + P^k
    OrbitResult out;
    std::vector<PrimeIdeal> used;
    size_t pi = 0;
    const auto& primes = small_primes();
    for (const Elem& y : M) {
        if (contains(Xp, y)) continue;
        bool placed = false;
        while (!placed) {
            if (pi >= primes.size()) throw Error(ErrorKind::BudgetExceeded, "ran out of primes");
            for (const PrimeIdeal& P : split_prime(K, primes[pi])) {
                if (placed || std::find(used.begin(), used.end(), P) != used.end()) continue;
                Modulus m = ideal_power(P, k);
                bool clear = true;
                for (const Elem& x : Xp) clear = clear && !m.contains(K.coord(K.sub(y, x), P.comp));
                if (!clear) continue;
                Coord t = K.coord(K.neg(y), P.comp);
                out.constraints.push_back({P, k, m.reduce(t)});
                used.push_back(P);
                placed = true;
            }
            if (!placed) ++pi;
        }
    }
    SolveOptions opt;
    opt.bound = bound;
    opt.skip = {K.zero()};
    SolveResult s = solve(Rp, out.constraints, opt);
    out.found = s.found;
    out.delta = s.y;
    out.tried = s.tried;
    return out;
}

} // namespace kfree

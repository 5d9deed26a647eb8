#include <cmath>
#include <random>

#include "doctest.h"
#include "kfree/sieve.hpp"
#include "oracles.hpp"

using namespace kfree;

namespace {

EtaleAlgebra field(i64 d) { return make_algebra({d == 1 ? FieldSpec::rational() : FieldSpec::quadratic(d)}); }

SieveSpec symmetry_sieve() {
    auto Q = field(1);
    return build_sieve(Q, TailRule::residue_classes(1, {{0}, {1}}), {{2, 0, 1, {}}, {3, 0, 1, {}}});
}

const long double kSixOverPi2 = 6.0L / (M_PIl * M_PIl);

} // namespace

TEST_CASE("build_sieve") {
    auto sq = kfree_sieve(field(1), 2);
    CHECK(sq.non_large);
    CHECK(sq.cofinite);
    auto sym = symmetry_sieve();
    CHECK(sym.non_large);
    CHECK(sym.cofinite);
    CHECK(sym.exceptions.size() == 2);
    auto empty = build_sieve(field(1), TailRule::empty(), {});
    CHECK(empty.non_large);
    CHECK(!empty.cofinite);
    try {
        build_sieve(field(1), TailRule::kfree(2), {{3, 0, 2, {{9, 0}}}});
        FAIL("expected ClassOutOfRange");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ClassOutOfRange);
    }
    // a local set covering everything makes the sieve large
    auto big = build_sieve(field(1), TailRule::kfree(2), {{2, 0, 1, {{0, 0}, {1, 0}}}});
    CHECK(!big.non_large);
    // residues {0,1,2} mod 2 cover Z/2
    auto big2 = build_sieve(field(1), TailRule::residue_classes(1, {{0}, {1}, {2}}), {});
    CHECK(!big2.non_large);
}

TEST_CASE("local_set") {
    auto sq = kfree_sieve(field(1), 2);
    auto L5 = local_set(sq, split_prime(sq.K, 5)[0]);
    CHECK(L5.mod.norm == 25);
    CHECK(L5.classes == std::vector<i64>{0});
    CHECK(L5.measure() == doctest::Approx(1.0 / 25));
    auto sym = symmetry_sieve();
    auto L7 = local_set(sym, split_prime(sym.K, 7)[0]);
    CHECK(L7.mod.norm == 7);
    CHECK(L7.classes == std::vector<i64>{0, 1});
    CHECK(local_set(sym, split_prime(sym.K, 3)[0]).count() == 0);
    auto e = build_sieve(field(2), TailRule::empty(), {});
    CHECK(local_set(e, split_prime(e.K, 7)[0]).count() == 0);
}

TEST_CASE("membership examples") {
    auto sq = kfree_sieve(field(1), 2);
    auto v12 = membership(sq, {12});
    CHECK(!v12.member);
    REQUIRE(v12.prime.has_value());
    CHECK(v12.prime->p == 2);
    CHECK(v12.class_index == 0);
    CHECK(membership(sq, {10}).member);
    CHECK(!membership(sq, {0}).member);
    auto sq3 = kfree_sieve(field(3), 2);
    auto v3 = membership(sq3, {3, 0});
    CHECK(!v3.member);
    REQUIRE(v3.prime.has_value());
    CHECK(v3.prime->p == 3);
    CHECK(v3.prime->kind == SplitKind::Ramified);
}

TEST_CASE("membership is coherent with local sets") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<i64> U(-500, 500);
    std::vector<SieveSpec> sieves = {kfree_sieve(field(1), 2), kfree_sieve(field(13), 2), kfree_sieve(field(-1), 3),
                                     symmetry_sieve()};
    for (int it = 0; it < 500; ++it) {
        const auto& R = sieves[rng() % sieves.size()];
        Elem x(R.K.degree);
        for (auto& v : x) v = U(rng);
        auto v = membership(R, x);
        // brute-force over primes p <= 50: x is excluded iff some local set holds it
        bool bad = false;
        for (i64 p : primes_up_to(50))
            for (auto& P : split_prime(R.K, p))
                if (local_set(R, P).contains(R.K.coord(x, P.comp))) bad = true;
        // below 51^k every prime that could matter has been looked at
        i64 lim = 1;
        for (int i = 0; i < R.tail.k; ++i) lim *= 51;
        std::vector<Elem> shifts = R.tail.residues;
        if (shifts.empty()) shifts.push_back(R.K.zero());
        bool small = true;
        for (auto& r : shifts)
            for (auto N : R.K.norms(R.K.sub(x, r))) small = small && std::llabs(N) < lim;
        if (small || bad) CHECK_MESSAGE(v.member == !bad, R.K.format(x) << " via " << (v.prime ? v.prime->to_string() : "-"));
        if (!v.member) {
            auto L = local_set(R, *v.prime);
            CHECK(L.contains(R.K.coord(x, v.prime->comp)));
            CHECK(L.contains_index(v.class_index));
        }
    }
}

TEST_CASE("enumerate_V examples") {
    auto sq = kfree_sieve(field(1), 2);
    std::vector<Elem> want;
    for (i64 v : {-10, -7, -6, -5, -3, -2, -1, 1, 2, 3, 5, 6, 7, 10}) want.push_back({v});
    CHECK(enumerate_V(sq, 10) == want);
    auto e = build_sieve(field(1), TailRule::empty(), {});
    CHECK(enumerate_V(e, 2) == std::vector<Elem>{{-2}, {-1}, {0}, {1}, {2}});
    auto one = kfree_sieve(field(1), 1);
    CHECK(enumerate_V(one, 10) == std::vector<Elem>{{-1}, {1}});
}

TEST_CASE("enumerate_V agrees with independent oracles") {
    // over Q: sieve of squares up to 10^4
    const i64 B = 10000;
    for (int k : {2, 3}) {
        std::vector<char> bad(B + 1, 0);
        for (i64 q = 2; std::pow(q, k) <= B; ++q) {
            i64 qk = static_cast<i64>(std::llround(std::pow(q, k)));
            for (i64 m = qk; m <= B; m += qk) bad[m] = 1;
        }
        std::vector<Elem> want;
        for (i64 x = -B; x <= B; ++x)
            if (x != 0 && !bad[std::llabs(x)]) want.push_back({x});
        CHECK(enumerate_V(kfree_sieve(field(1), k), B) == want);
    }
    // quadratic fields: norm/content oracle
    for (i64 d : {2, 13, -1, 5, -3}) {
        oracle::Quad Qd(d);
        for (int k : {2, 3}) {
            std::vector<Elem> want;
            for (i64 a = -30; a <= 30; ++a)
                for (i64 b = -30; b <= 30; ++b)
                    if (Qd.kfree(a, b, k)) want.push_back({a, b});
            CHECK(enumerate_V(kfree_sieve(field(d), k), 30) == want);
        }
    }
    // product algebra: componentwise
    auto P = make_algebra({FieldSpec::rational(), FieldSpec::quadratic(2)});
    oracle::Quad Q2(2);
    i64 n = 0;
    for (auto& x : enumerate_V(kfree_sieve(P, 2), 6)) {
        CHECK(oracle::kfree_int(x[0], 2));
        CHECK(Q2.kfree(x[1], x[2], 2));
        ++n;
    }
    i64 want = 0;
    for (i64 a = -6; a <= 6; ++a)
        for (i64 b = -6; b <= 6; ++b)
            for (i64 c = -6; c <= 6; ++c) want += oracle::kfree_int(a, 2) && Q2.kfree(b, c, 2);
    CHECK(n == want);
}

TEST_CASE("count_V matches enumerate_V and shards deterministically") {
    auto R = kfree_sieve(field(13), 2);
    i64 n = static_cast<i64>(enumerate_V(R, 40).size());
    CHECK(count_V(R, 40, 1) == n);
    CHECK(count_V(R, 40, 3) == n);
}

TEST_CASE("density_interval") {
    auto sq = kfree_sieve(field(1), 2);
    auto I = density_interval(sq, 10000);
    CHECK(I.contains(kSixOverPi2));
    CHECK(I.width() < 1e-4L);
    // empirical density at 10^5 against the interval midpoint
    i64 B = 100000;
    long double emp = static_cast<long double>(count_V(sq, B)) / (2 * B + 1);
    CHECK(std::fabs(static_cast<double>(emp - I.mid())) < 2e-3);

    auto e = build_sieve(field(2), TailRule::empty(), {});
    auto Ie = density_interval(e, 100);
    CHECK(Ie.lo == 1.0L);
    CHECK(Ie.hi == 1.0L);
    try {
        density_interval(kfree_sieve(field(1), 1), 100);
        FAIL("expected TailNotBoundable");
    } catch (const Error& err) {
        CHECK(err.kind() == ErrorKind::TailNotBoundable);
    }
    // lower bound positive for every kfree(k >= 2) sieve in the grid
    for (i64 d : {1, 2, 13, -1, 5})
        for (int k : {2, 3, 4}) {
            auto J = density_interval(kfree_sieve(field(d), k), 1000);
            CHECK(J.lo > 0);
            CHECK(J.lo <= J.hi);
        }
    // the interval for Q(i), k = 2 contains 1/zeta_{Q(i)}(2) = 1/(zeta(2) * Catalan)
    auto Ji = density_interval(kfree_sieve(field(-1), 2), 20000);
    CHECK(Ji.contains(1.0L / (M_PIl * M_PIl / 6.0L * 0.915965594177219015L)));
}

TEST_CASE("tail_count") {
    auto Q = field(1);
    CHECK(tail_count(Q, 2, 50, 10) == 0);
    CHECK(tail_count(Q, 2, 200, 10) == 8);

    // double-loop divisor oracle over Z
    auto brute = [](i64 X, i64 M, int k) {
        std::vector<char> hit(X + 1, 0);
        for (i64 q = M + 1; std::pow(q, k) <= X; ++q) {
            i64 qk = static_cast<i64>(std::llround(std::pow(q, k)));
            for (i64 m = qk; m <= X; m += qk) hit[m] = 1;
        }
        i64 c = 0;
        for (i64 x = 1; x <= X; ++x) c += hit[x];
        return 2 * c;
    };
    i64 X = 100000;
    i64 prev = -1;
    for (i64 M = 256; M >= 4; M /= 2) {
        i64 c = tail_count(Q, 2, X, M);
        CHECK(c == brute(X, M, 2));
        if (prev >= 0) CHECK(prev <= c);  // monotone in M
        prev = c;
    }
    // decay roughly like X/M: doubling M at least does not increase, and M*count stays bounded
    for (i64 M : {16, 32, 64, 128}) CHECK(tail_count(Q, 2, X, M) * M <= 4 * X);
    CHECK(tail_count(Q, 3, 5000, 3) == brute(5000, 3, 3));

    // quadratic: M = 0 counts every nonzero x, M = 1 counts the non-k-free ones
    for (i64 d : {2, 13, -1}) {
        auto K = field(d);
        oracle::Quad Qd(d);
        CHECK(tail_count(K, 2, 12, 0) == 25 * 25 - 1);
        i64 nonfree = 0;
        for (i64 a = -12; a <= 12; ++a)
            for (i64 b = -12; b <= 12; ++b)
                if ((a || b) && !Qd.kfree(a, b, 2)) ++nonfree;
        CHECK(tail_count(K, 2, 12, 1) == nonfree);
        CHECK(tail_count(K, 2, 12, 8) <= tail_count(K, 2, 12, 4));
    }
}

TEST_CASE("sieve text format round trip") {
    auto R = parse_sieve(
        "# symmetry example\n"
        "algebra Q\n"
        "tail residues 1 : 0,1\n"
        "exceptions\n"
        "2 1 :\n"
        "3 1 :\n");
    CHECK(R.exceptions.size() == 2);
    CHECK(R.tail.kind == TailRule::Kind::Residues);
    auto again = parse_sieve(format_sieve(R));
    CHECK(format_sieve(again) == format_sieve(R));
    auto S = parse_sieve("algebra Q(sqrt 13)\ntail kfree 2\n3 1 2 : 0, 4\n");
    REQUIRE(S.exceptions.size() == 1);
    CHECK(S.exceptions[0].first.slot == 1);
    CHECK(S.exceptions[0].second.count() == 2);
    CHECK_THROWS(parse_sieve("tail kfree 2\n"));
    CHECK_THROWS(parse_sieve("algebra Q\ntail kfree 2\n3 2 : 9\n"));
}

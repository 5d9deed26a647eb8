#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kfree/entropy.hpp"
#include "kfree/shiftspace.hpp"
#include "oracles.hpp"

using namespace kfree;

namespace {

EtaleAlgebra Q() { return make_algebra({FieldSpec::rational()}); }
EtaleAlgebra field(i64 d) { return make_algebra({FieldSpec::quadratic(d)}); }

constexpr long double kZeta2 = std::numbers::pi_v<long double> * std::numbers::pi_v<long double> / 6;
constexpr long double kCatalan = 0.915965594177219015054603514932384110774L;

} // namespace

TEST_CASE("zeta_K over Q against the series") {
    auto z = zeta_K(Q(), 2, 100000);
    CHECK(z.contains(kZeta2));
    // partial sums of 1/m^2 with the integral tail bounds
    long double s = 0;
    const i64 M = 2000000;
    for (i64 m = M; m >= 1; --m) s += 1.0L / (static_cast<long double>(m) * m);
    long double lo = s + 1.0L / (M + 1), hi = s + 1.0L / M;
    CHECK(z.lo <= hi);
    CHECK(z.hi >= lo);
    CHECK(z.width() < 1e-4L);
    auto z3 = zeta_K(Q(), 3, 10000);
    CHECK(z3.contains(1.202056903159594285399738161511449990765L));
}

TEST_CASE("zeta_K over Q(i)") {
    auto z = zeta_K(field(-1), 2, 10000);
    CHECK(z.contains(kZeta2 * kCatalan));
    // Euler product to 10^6 with the splitting read off p mod 4
    long double e = 1.0L / (1 - 0.25L);
    for (i64 p = 3; p <= 1000000; p += 2) {
        if (!oracle::prime(p)) continue;
        long double x = 1.0L / (static_cast<long double>(p) * p);
        e *= p % 4 == 1 ? 1 / ((1 - x) * (1 - x)) : 1 / (1 - x * x);
    }
    CHECK(z.contains(e));
    CHECK(std::fabs(e - 1.5067030099L) < 1e-5L);
}

TEST_CASE("zeta_K degenerate cutoff and monotone widths") {
    for (auto K : {Q(), field(-1), field(13)}) {
        auto z = zeta_K(K, 2, 1);
        CHECK(z.lo <= 1.0L);
        CHECK(z.lo >= 1.0L - 1e-15L);
    }
    CHECK(zeta_K(Q(), 2, 1).contains(kZeta2));
    CHECK(zeta_K(field(-1), 2, 1).contains(kZeta2 * kCatalan));
    long double prev = 1e9;
    for (i64 P : {1, 10, 100, 1000, 10000, 100000}) {
        long double w = zeta_K(Q(), 2, P).width();
        CHECK(w < prev);
        prev = w;
    }
    CHECK_THROWS_AS(zeta_K(Q(), 1, 10), Error);
}

TEST_CASE("entropy_product") {
    const long double l2 = std::log(2.0L);
    auto e = entropy_product(kfree_sieve(Q(), 2), 10000);
    CHECK(e.contains(l2 / kZeta2));
    CHECK(std::fabs(e.mid() - 0.421383L) < 1e-3L);
    auto empty = entropy_product(build_sieve(Q(), TailRule::empty(), {}), 100);
    CHECK(empty.contains(l2));
    CHECK(empty.width() < 1e-15L);
    CHECK_THROWS_AS(entropy_product(kfree_sieve(Q(), 1), 100), Error);
    // k-free: log 2 / zeta_K(k), computed the other way round
    for (auto K : {Q(), field(2), field(13)})
        for (int k : {2, 3}) {
            auto a = entropy_product(kfree_sieve(K, k), 20000);
            auto z = zeta_K(K, k, 20000);
            Interval b{l2 / z.hi, l2 / z.lo};
            CHECK(std::fabs(a.mid() - b.mid()) <= a.width() + b.width());
            CHECK(a.lo <= b.hi);
            CHECK(b.lo <= a.hi);
        }
}

TEST_CASE("empirical_entropy") {
    CHECK(empirical_entropy(kfree_sieve(Q(), 2), 8) == doctest::Approx(std::log(175.0) / 8));
    CHECK(empirical_entropy(kfree_sieve(Q(), 2), 8) == doctest::Approx(0.6456).epsilon(1e-4));
    CHECK(empirical_entropy(build_sieve(Q(), TailRule::empty(), {}), 4) == doctest::Approx(std::log(2.0)));
    CHECK(empirical_entropy(kfree_sieve(Q(), 2), 16) < empirical_entropy(kfree_sieve(Q(), 2), 8));
    // exact counts dominate the random-translate lower bound
    for (int k : {2, 3}) {
        auto R = kfree_sieve(Q(), k);
        long double lo = entropy_product(R, 10000).lo;
        for (i64 N = 1; N <= 18; ++N) CHECK(empirical_entropy(R, N) >= lo);
    }
    auto Ri = kfree_sieve(field(-1), 2);
    long double loi = entropy_product(Ri, 10000).lo;
    for (i64 N = 1; N <= 4; ++N) CHECK(empirical_entropy(Ri, N) >= loi);
    CHECK_THROWS_AS(empirical_entropy(kfree_sieve(Q(), 2), 40), Error);
}

#include "kfree/common.hpp"

#include <cmath>
#include <cstdlib>
#include <mutex>

namespace kfree {

const char* error_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidDiscriminant: return "InvalidDiscriminant";
    case ErrorKind::ComponentMismatch: return "ComponentMismatch";
    case ErrorKind::ClassOutOfRange: return "ClassOutOfRange";
    case ErrorKind::TailNotBoundable: return "TailNotBoundable";
    case ErrorKind::InvalidConstraint: return "InvalidConstraint";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::NoWitness: return "NoWitness";
    case ErrorKind::RegionTooSmall: return "RegionTooSmall";
    case ErrorKind::Overflow: return "Overflow";
    case ErrorKind::Parse: return "Parse";
    }
    return "Error";
}

i64 gcd(i64 a, i64 b) {
    a = a < 0 ? -a : a;
    b = b < 0 ? -b : b;
    while (b) {
        i64 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

i64 ext_gcd(i64 a, i64 b, i64& x, i64& y) {
    i64 x0 = 1, y0 = 0, x1 = 0, y1 = 1;
    while (b != 0) {
        i64 q = floor_div(a, b);
        i64 r = a - q * b;
        a = b;
        b = r;
        i64 t = x0 - q * x1;
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

i64 lcm(i64 a, i64 b) {
    if (a == 0 || b == 0) return 0;
    return narrow(static_cast<i128>(std::llabs(a) / gcd(a, b)) * std::llabs(b));
}

std::optional<std::pair<i64, i64>> crt(i64 r1, i64 m1, i64 r2, i64 m2) {
    i64 x, y;
    i64 g = ext_gcd(m1, m2, x, y);
    if (mod(r2 - r1, g) != 0) return std::nullopt;
    i64 l = lcm(m1, m2);
    // r1 + m1 * x * (r2 - r1)/g
    i64 step = mod128(static_cast<i128>(x) * ((r2 - r1) / g), m2 / g);
    i64 r = mod128(static_cast<i128>(r1) + static_cast<i128>(m1) * step, l);
    return std::make_pair(r, l);
}

i64 inv_mod(i64 a, i64 m) {
    i64 x, y;
    i64 g = ext_gcd(mod(a, m), m, x, y);
    if (g != 1) throw Error(ErrorKind::InvalidArgument, "not invertible modulo " + std::to_string(m));
    return mod(x, m);
}

i64 mul_mod(i64 a, i64 b, i64 m) { return mod128(static_cast<i128>(a) * b, m); }

i64 pow_mod(i64 a, i64 e, i64 m) {
    i64 r = 1 % m;
    a = mod(a, m);
    while (e > 0) {
        if (e & 1) r = mul_mod(r, a, m);
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    return r;
}

i64 narrow(i128 v) {
    if (v > static_cast<i128>(INT64_MAX) || v < static_cast<i128>(INT64_MIN))
        throw Error(ErrorKind::Overflow, "value exceeds 64 bits");
    return static_cast<i64>(v);
}

i64 ipow(i64 b, int e) {
    i128 r = 1;
    for (int i = 0; i < e; ++i) r = static_cast<i128>(narrow(r)) * b;
    return narrow(r);
}

i64 isqrt(i64 n) {
    if (n < 0) throw Error(ErrorKind::InvalidArgument, "isqrt of negative");
    i64 r = static_cast<i64>(std::sqrt(static_cast<long double>(n)));
    while (r > 0 && static_cast<i128>(r) * r > n) --r;
    while (static_cast<i128>(r + 1) * (r + 1) <= n) ++r;
    return r;
}

i64 iroot(i64 n, int k) {
    if (k == 1) return n;
    i64 r = static_cast<i64>(std::pow(static_cast<long double>(n), 1.0L / k));
    auto pw = [k](i64 b) {
        i128 v = 1;
        for (int i = 0; i < k; ++i) {
            v *= b;
            if (v > static_cast<i128>(INT64_MAX)) return static_cast<i128>(INT64_MAX) + 1;
        }
        return v;
    };
    while (r > 0 && pw(r) > n) --r;
    while (pw(r + 1) <= n) ++r;
    return r;
}

std::vector<i64> primes_up_to(i64 n) {
    std::vector<i64> out;
    if (n < 2) return out;
    std::vector<bool> comp(static_cast<size_t>(n + 1), false);
    for (i64 i = 2; i <= n; ++i) {
        if (comp[i]) continue;
        out.push_back(i);
        for (i64 j = i * i; j <= n; j += i) comp[j] = true;
    }
    return out;
}

const std::vector<i64>& small_primes() {
    static const std::vector<i64> table = primes_up_to((1 << 22));
    return table;
}

bool is_prime(i64 n) {
    if (n < 2) return false;
    for (i64 q : small_primes()) {
        if (q * q > n) return true;
        if (n % q == 0) return n == q;
    }
    for (i64 q = small_primes().back() + 2; q * q <= n; q += 2)
        if (n % q == 0) return false;
    return true;
}

bool is_squarefree(i64 n) {
    if (n == 0) return false;
    return prime_power_divisors(n, 2).empty();
}

std::vector<i64> prime_power_divisors(i64 n, int k) {
    std::vector<i64> out;
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "prime_power_divisors of 0");
    if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1");
    u64 m = n < 0 ? static_cast<u64>(-(n + 1)) + 1 : static_cast<u64>(n);
    // Trial division while q^stop <= m. For k = 2 the cofactor left after the
    // cube root has at most two prime factors, so only a square can matter.
    int stop = k == 2 ? 3 : std::max(k, 2);
    auto too_big = [&](u64 q) {
        u64 v = 1;
        for (int i = 0; i < stop; ++i) {
            if (v > m / q) return true;
            v *= q;
        }
        return v > m;
    };
    auto step = [&](u64 q) {
        int e = 0;
        while (m % q == 0) {
            m /= q;
            ++e;
        }
        if (e >= k) out.push_back(static_cast<i64>(q));
    };
    bool done = false;
    for (i64 qs : small_primes()) {
        if (too_big(static_cast<u64>(qs))) {
            done = true;
            break;
        }
        step(static_cast<u64>(qs));
    }
    if (!done)
        for (u64 q = static_cast<u64>(small_primes().back()) + 2; !too_big(q); q += 2) step(q);
    if (m > 1) {
        if (k == 1) out.push_back(static_cast<i64>(m));
        if (k == 2) {
            u64 r = static_cast<u64>(isqrt(static_cast<i64>(m)));
            if (r * r == m) out.push_back(static_cast<i64>(r));
        }
    }
    return out;
}

} // namespace kfree

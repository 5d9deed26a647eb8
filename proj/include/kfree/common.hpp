// Shared integer helpers, error type and the cached prime table.
#ifndef KFREE_COMMON_HPP
#define KFREE_COMMON_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kfree {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using i128 = __int128;

enum class ErrorKind {
    InvalidArgument,
    InvalidDiscriminant,
    ComponentMismatch,
    ClassOutOfRange,
    TailNotBoundable,
    InvalidConstraint,
    BudgetExceeded,
    PreconditionFailed,
    NoWitness,
    RegionTooSmall,
    Overflow,
    Parse,
};

const char* error_name(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Floor-style modulus, result in [0, m).
inline i64 mod(i64 a, i64 m) {
    i64 r = a % m;
    return r < 0 ? r + m : r;
}
inline i64 mod128(i128 a, i64 m) {
    i128 r = a % m;
    return static_cast<i64>(r < 0 ? r + m : r);
}
inline i64 floor_div(i64 a, i64 b) {
    i64 q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

i64 gcd(i64 a, i64 b);
// Returns g and sets x, y with a*x + b*y = g >= 0.
i64 ext_gcd(i64 a, i64 b, i64& x, i64& y);
// Inverse of a mod m; throws if not invertible.
i64 inv_mod(i64 a, i64 m);
i64 lcm(i64 a, i64 b); // throws Overflow
// x = r1 mod m1 and x = r2 mod m2 for arbitrary moduli; returns (x, lcm).
std::optional<std::pair<i64, i64>> crt(i64 r1, i64 m1, i64 r2, i64 m2);
i64 mul_mod(i64 a, i64 b, i64 m);
i64 pow_mod(i64 a, i64 e, i64 m);
// Exact integer power; throws Overflow past int64.
i64 ipow(i64 b, int e);
i64 narrow(i128 v);
bool is_prime(i64 n);
bool is_squarefree(i64 n);
i64 isqrt(i64 n);
// Largest r with r^k <= n (n >= 0).
i64 iroot(i64 n, int k);

// Primes below 2^22, computed once.
const std::vector<i64>& small_primes();
std::vector<i64> primes_up_to(i64 n);
// Distinct prime divisors q of n with q^k | n (n != 0). k = 1 gives all primes.
std::vector<i64> prime_power_divisors(i64 n, int k);

} // namespace kfree

#endif

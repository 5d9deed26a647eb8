#include "kfree/entropy.hpp"

#include <cmath>

#include "kfree/shiftspace.hpp"

namespace kfree {

Interval zeta_K(const EtaleAlgebra& K, int s, i64 cutoff) {
    if (s < 2) throw Error(ErrorKind::InvalidArgument, "zeta_K needs s >= 2");
    if (cutoff < 1) throw Error(ErrorKind::InvalidArgument, "cutoff must be >= 1");
    long double E = 1;
    long double ops = 0;
    for (i64 p : primes_up_to(cutoff))
        for (const auto& P : split_prime(K, p)) {
            if (P.norm() > cutoff) continue;
            E /= 1.0L - std::pow(static_cast<long double>(P.norm()), -s);
            ops += 3;
        }
    // log of the missing factors: sum -log(1 - x) <= sum x / (1 - x) with x <= (cutoff+1)^-s,
    // and sum_{Nm > cutoff} Nm^-s <= deg * cutoff^(1-s) / (s-1)
    long double c = static_cast<long double>(cutoff);
    long double x0 = std::pow(c + 1, -s);
    long double tail = K.degree * std::pow(c, 1 - s) / (s - 1) / (1.0L - x0);
    long double hi = E * std::exp(tail);
    long double pad = (ops + 16) * std::ldexp(hi, -60);
    return {E - pad, hi + pad};
}

Interval entropy_product(const SieveSpec& R, i64 cutoff) {
    Interval d = density_interval(R, cutoff);
    const long double l2 = std::log(2.0L);
    long double pad = 4 * std::ldexp(l2, -60);
    return {std::max(0.0L, d.lo * l2 - pad), d.hi * l2 + pad};
}

long double empirical_entropy(const SieveSpec& R, i64 N) {
    if (N < 1) throw Error(ErrorKind::InvalidArgument, "N must be >= 1");
    i64 c = count_admissible(R, N);
    long double size = std::pow(static_cast<long double>(N), R.K.degree);
    return std::log(static_cast<long double>(c)) / size;
}

} // namespace kfree

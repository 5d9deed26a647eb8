// Test-side reference implementations, written independently of src/.
#ifndef KFREE_TEST_ORACLES_HPP
#define KFREE_TEST_ORACLES_HPP

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

namespace oracle {

using i64 = std::int64_t;

inline i64 md(i64 a, i64 m) { return ((a % m) + m) % m; }

inline bool prime(i64 n) {
    if (n < 2) return false;
    for (i64 q = 2; q * q <= n; ++q)
        if (n % q == 0) return false;
    return true;
}

// Roots of x^2 - t x - n modulo m by brute force.
inline std::vector<i64> roots(i64 t, i64 n, i64 m) {
    std::vector<i64> r;
    for (i64 x = 0; x < m; ++x)
        if (md(x * x - t * x - n, m) == 0) r.push_back(x);
    return r;
}

// |x| is k-free over Z (x != 0), by trial division.
inline bool kfree_int(i64 x, int k) {
    if (x == 0) return false;
    x = std::llabs(x);
    for (i64 q = 2; q * q <= x || q <= 3; ++q) {
        i64 qk = 1;
        for (int i = 0; i < k; ++i) qk *= q;
        if (qk > x) break;
        if (x % qk == 0) return false;
    }
    return true;
}

inline i64 vq(i64 x, i64 q) {
    if (x == 0) return 1000;
    int v = 0;
    while (x % q == 0) {
        x /= q;
        ++v;
    }
    return v;
}

// k-freeness of a + b w in the ring of integers of Q(sqrt d), via norms and
// contents: for split q the larger of the two valuations is v_q(N) - v_q(gcd).
struct Quad {
    i64 d, t, n;
    explicit Quad(i64 d_) : d(d_), t(md(d_, 4) == 1 ? 1 : 0), n(md(d_, 4) == 1 ? (d_ - 1) / 4 : d_) {}
    i64 norm(i64 a, i64 b) const { return a * a + t * a * b - n * b * b; }
    i64 disc() const { return t ? d : 4 * d; }
    // 0 split, 1 inert, 2 ramified
    int type(i64 q) const {
        if (md(disc(), q) == 0) return 2;
        return roots(t, n, q).empty() ? 1 : 0;
    }
    bool kfree(i64 a, i64 b, int k) const {
        if (a == 0 && b == 0) return false;
        i64 N = std::llabs(norm(a, b));
        i64 g = std::llabs(std::gcd(a, b));
        // strip prime factors of N in increasing order
        for (i64 q = 2;; ++q) {
            i64 qk = 1;
            bool over = false;
            for (int i = 0; i < k && !over; ++i) {
                qk *= q;
                if (qk > N) over = true;
            }
            if (over) break;
            if (N % q != 0) continue;
            int vN = 0;
            while (N % q == 0) {
                N /= q;
                ++vN;
            }
            int ty = type(q);
            i64 vg = vq(g, q);
            i64 v = ty == 2 ? vN : ty == 1 ? vg : vN - vg;
            if (v >= k) return false;
        }
        return true;
    }
};

} // namespace oracle

#endif

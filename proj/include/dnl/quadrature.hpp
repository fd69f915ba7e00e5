#pragma once

// Gauss-Legendre rules (Newton iteration on the Legendre recurrence).

#include <cmath>
#include <utility>
#include <vector>

namespace dnl {

struct QuadRule {
    std::vector<double> x;
    std::vector<double> w;
};

inline QuadRule gauss_legendre(int n) {
    QuadRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return r;
}

// rule mapped onto [a, b]
inline QuadRule gauss_legendre(int n, double a, double b) {
    QuadRule r = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        r.x[i] = mid + half * r.x[i];
        r.w[i] *= half;
    }
    return r;
}

template <typename F>
double integrate_gl(const F& f, double a, double b, int n) {
    QuadRule r = gauss_legendre(n, a, b);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += r.w[i] * f(r.x[i]);
    return s;
}

} // namespace dnl

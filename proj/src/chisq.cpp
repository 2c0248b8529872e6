#include "chisq.hpp"

#include "error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace magic {

namespace {

constexpr const char* kModule = "chisq";
constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

double log_prefactor(double a, double x) { return a * std::log(x) - x - std::lgamma(a); }

// sum_{n>=0} x^n / (a (a+1) ... (a+n)), valid for x < a + 1
double lower_series(double a, double x) {
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEps) return sum * std::exp(log_prefactor(a, x));
    }
    throw numerical_error(kModule, "incomplete gamma series did not converge (a=" +
                                       std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

// modified Lentz evaluation of the continued fraction for Q, valid for x >= a + 1
double upper_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEps) return std::exp(log_prefactor(a, x)) * h;
    }
    throw numerical_error(kModule, "incomplete gamma continued fraction did not converge (a=" +
                                       std::to_string(a) + ", x=" + std::to_string(x) + ")");
}

void check_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || std::isnan(x))
        throw config_error(kModule, "incomplete gamma needs a > 0 and x >= 0");
}

}  // namespace

double gamma_p(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return lower_series(a, x);
    return 1.0 - upper_fraction(a, x);
}

double gamma_q(double a, double x) {
    check_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - lower_series(a, x);
    return upper_fraction(a, x);
}

double chisq_cdf(double x, int df) {
    if (df < 1) throw config_error(kModule, "df must be >= 1, got " + std::to_string(df));
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * df, 0.5 * x);
}

double chisq_sf(double x, int df) {
    if (df < 1) throw config_error(kModule, "df must be >= 1, got " + std::to_string(df));
    if (x <= 0.0) return 1.0;
    return gamma_q(0.5 * df, 0.5 * x);
}

double chisq_quantile(double alpha, int df) {
    if (df < 1) throw config_error(kModule, "df must be >= 1, got " + std::to_string(df));
    if (!(alpha > 0.0 && alpha < 1.0))
        throw config_error(kModule, "alpha must lie in (0, 1), got " + std::to_string(alpha));

    const double k = 0.5 * df;
    double lo = 0.0;
    double hi = df + 10.0 * std::sqrt(2.0 * df) + 10.0;
    while (chisq_sf(hi, df) > alpha) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw numerical_error(kModule, "quantile bracket failed");
    }

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 500; ++it) {
        const double f = chisq_sf(x, df) - alpha;  // decreasing in x
        if (f > 0.0) lo = x; else hi = x;
        const double log_pdf = (k - 1.0) * std::log(0.5 * x) - 0.5 * x - std::lgamma(k) - std::log(2.0);
        const double pdf = std::exp(log_pdf);
        double next = (pdf > 0.0 && std::isfinite(pdf)) ? x + f / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - x);
        x = next;
        if (step <= 1e-14 * std::max(1.0, x) || hi - lo <= 1e-14 * std::max(1.0, x)) return x;
    }
    throw numerical_error(kModule, "quantile iteration did not converge");
}

double normal_critical(double level) {
    if (!(level > 0.0 && level < 1.0))
        throw config_error(kModule, "confidence level must lie in (0, 1)");
    return std::sqrt(chisq_quantile(1.0 - level, 1));
}

}  // namespace magic

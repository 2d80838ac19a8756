#pragma once

#include <vector>

namespace qlimits {

double mean(const std::vector<double>& xs);

// Unbiased sample variance (n - 1 denominator); 0 for fewer than two values.
double sample_variance(const std::vector<double>& xs);

// p-quantile with linear interpolation between order statistics (the common
// spreadsheet/NumPy default rule).  Input need not be sorted.
double quantile(std::vector<double> xs, double p);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test.  The p-value is the asymptotic tail
// Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D) with ne = n m / (n + m), accurate
// for the sample sizes used here (hundreds and up).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Tail function Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double ks_tail(double lambda);

} // namespace qlimits

#ifndef KAL_STATS_HPP
#define KAL_STATS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace kal {

/// Pairwise (binary-tree) summation in the given order. Deterministic for a
/// fixed input order and independent of worker count.
double pairwise_sum(std::span<const double> values);

/// Permutation-invariant sum: values are sorted by value before the pairwise
/// reduction, so any reordering of the inputs produces bitwise identical
/// results. Used for per-particle reductions (exchangeability contract).
double stable_sum(std::vector<double> values);

/// Sample mean and standard error over i.i.d. samples (one per realization).
struct MeanErr {
  double mean = 0.0;
  std::optional<double> stderr_;  // absent when n < 2
  std::size_t n = 0;
};

MeanErr mean_err(std::span<const double> samples);

/// Sample covariance of two equally sized sample vectors.
double sample_covariance(std::span<const double> a, std::span<const double> b);

/// Two-sample Kolmogorov-Smirnov test.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2k^2x^2).
double kolmogorov_survival(double x);

/// Chi-square test of observed counts against expected counts.
struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

ChiSquareResult chi_square_test(std::span<const double> observed,
                                std::span<const double> expected);

/// Upper regularized incomplete gamma Q(a, x); used for chi-square p-values.
double gamma_q(double a, double x);

/// Total-variation distance between two distributions on a shared support.
double total_variation(std::span<const double> p, std::span<const double> q);

/// Trapezoid rule on a (possibly non-uniform) grid.
double trapezoid(std::span<const double> t, std::span<const double> f);

}  // namespace kal

#endif

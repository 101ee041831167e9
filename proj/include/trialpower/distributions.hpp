#pragma once

namespace trialpower {

/// 0.975 standard normal quantile.
inline constexpr double kZ975 = 1.959963984540054;

/// Floor applied to reported p-values.
inline constexpr double kMinPValue = 1e-15;

double normal_cdf(double x);
double normal_quantile(double p);

/// 2 * P(Z > |z|), floored at kMinPValue.
double two_sided_normal_p(double z);

double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

/// 2 * P(T_df > |t|), floored at kMinPValue.
double two_sided_t_p(double t, double df);

/// Upper tail of chi-square with df degrees of freedom, floored.
double chi_square_sf(double x, double df);

inline double floor_p(double p) {
    if (!(p >= kMinPValue)) return kMinPValue;
    return p > 1.0 ? 1.0 : p;
}

}  // namespace trialpower

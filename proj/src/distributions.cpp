#include "trialpower/distributions.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace trialpower {

namespace {

using Policy = boost::math::policies::policy<boost::math::policies::promote_double<false>>;

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double, Policy>(), p);
}

double two_sided_normal_p(double z) {
    if (std::isnan(z)) return 1.0;
    return floor_p(std::erfc(std::fabs(z) / std::sqrt(2.0)));
}

double student_t_cdf(double t, double df) {
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    return boost::math::cdf(boost::math::students_t_distribution<double, Policy>(df), t);
}

double student_t_quantile(double p, double df) {
    return boost::math::quantile(boost::math::students_t_distribution<double, Policy>(df), p);
}

double two_sided_t_p(double t, double df) {
    if (std::isnan(t)) return 1.0;
    if (std::isinf(t)) return kMinPValue;
    const boost::math::students_t_distribution<double, Policy> dist(df);
    return floor_p(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

double chi_square_sf(double x, double df) {
    if (std::isnan(x) || x <= 0.0) return 1.0;
    if (std::isinf(x)) return kMinPValue;
    const boost::math::chi_squared_distribution<double, Policy> dist(df);
    return floor_p(boost::math::cdf(boost::math::complement(dist, x)));
}

}  // namespace trialpower

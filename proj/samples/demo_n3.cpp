// Library walk-through for three cone points of angle pi at 0, 1, -1.
#include <iostream>

#include "conemetric/metric.hpp"

int main() {
    using namespace conemetric;
    using exact::Rational;
    using exact::Scalar;

    const exact::ConeConfiguration conf({Scalar(0), Scalar(1), Scalar(-1)},
                                        {Rational(1, 2), Rational(1, 2), Rational(1, 2)});
    const auto w = exact::weights_from_angles(conf);
    std::cout << "stable: " << exact::is_parabolically_stable(exact::canonical_flag(conf), w, conf) << "\n";

    const auto sol = solve_unitarizing_parameters(conf);
    std::cout << "beta:";
    for (const auto& b : sol.data.accessory()) std::cout << ' ' << b;
    std::cout << "\ndefect: " << sol.certificate.defect << "\n";

    const MetricContext ctx(sol);
    for (cplx z : {cplx(0.5, 0.5), cplx(0.0, 1.0), cplx(2.0, 0.0)})
        std::cout << "lambda" << z << " = " << sample(ctx, z).lambda << "\n";
    std::cout << "cone angle at 0: " << cone_angle_estimate(ctx, 0).estimate << "\n";
}

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <string>

#include "thetaglue/error.hpp"

namespace thetaglue {

using complex = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr complex two_pi_i{0.0, 2.0 * std::numbers::pi};

/// e^{2 pi i tau}
inline complex nome(complex tau) { return std::exp(two_pi_i * tau); }

/// Complexified Kaehler data of the two components and the derived nomes.
struct KahlerParams {
    complex tau1, tau2;
    complex tau;  // tau1 + tau2
    complex q1, q2;
    complex q;    // q1 * q2
};

inline KahlerParams make_params(complex tau1, complex tau2) {
    if (!(tau1.imag() > 0.0) || !(tau2.imag() > 0.0))
        throw domain_error("Kaehler parameters need positive imaginary parts");
    KahlerParams p{tau1, tau2, tau1 + tau2, nome(tau1), nome(tau2), {}};
    p.q = p.q1 * p.q2;
    return p;
}

inline std::string complex_text(complex c) {
    std::ostringstream os;
    os.precision(17);
    os << c.real() << (c.imag() < 0 || std::signbit(c.imag()) ? "-" : "+") << std::abs(c.imag()) << "i";
    return os.str();
}

} // namespace thetaglue

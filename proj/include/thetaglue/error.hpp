#pragma once

#include <stdexcept>
#include <string>

namespace thetaglue {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// qseries
class ring_mismatch : public error { public: using error::error; };
class not_invertible : public error { public: using error::error; };
class floor_violation : public error { public: using error::error; };
class lattice_violation : public error { public: using error::error; };
class non_terminating : public error { public: using error::error; };
class not_proportional : public error { public: using error::error; };
class not_quasi_periodic : public not_proportional { public: using not_proportional::not_proportional; };

// numerics and geometry
class domain_error : public error { public: using error::error; };
class contour_failure : public error { public: using error::error; };
class convergence_failure : public error { public: using error::error; };
class outside_domain : public error { public: using error::error; };
class inconsistent_relation : public error { public: using error::error; };

// command line
class usage_error : public error { public: using error::error; };

} // namespace thetaglue

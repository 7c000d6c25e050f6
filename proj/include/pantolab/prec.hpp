#pragma once

#include <mpfr.h>

#include <cmath>

#include "pantolab/errors.hpp"

namespace pantolab {

using prec_t = mpfr_prec_t;

/// Precision context passed to every numerical routine.
///
/// `bits` is the mantissa size of the arithmetic; `target_rel_err` is the
/// relative accuracy the caller wants certified.  Routines may use guard
/// bits internally but never mutate the context.  There is no global
/// precision state anywhere in the library.
struct PrecContext {
    long bits = 256;
    double target_rel_err = 1e-30;

    PrecContext() = default;
    PrecContext(long b, double tol) : bits(b), target_rel_err(tol) { validate(); }

    void validate() const {
        if (bits < 64)
            throw InvalidInput("precision context: bits must be >= 64");
        if (!(target_rel_err > 0))
            throw InvalidInput("precision context: target_rel_err must be positive");
        // 2^(1-bits) is the best relative error representable at `bits`;
        // below ~1070 bits this is checkable in double without underflow.
        double floor_err = std::ldexp(1.0, bits < 1070 ? int(1 - bits) : -1069);
        if (target_rel_err < floor_err)
            throw InvalidInput("precision context: target_rel_err below 2^(1-bits)");
    }

    /// Working precision for internal computations.
    prec_t work(long guard = 32) const { return prec_t(bits + guard); }

    /// log2 of the target, used for truncation thresholds.
    double target_log2() const { return std::log2(target_rel_err); }
};

} // namespace pantolab

#pragma once

// Coefficients shared by the scalar and AVX2 kernels. Both paths evaluate
// the same Horner chains in the same order, which is what makes them
// bit-identical.
namespace tesl::simd::poly {

inline constexpr double kLn2 = 0.6931471805599453094172321;
inline constexpr double kSqrt2 = 1.4142135623730950488016887;
inline constexpr double kTwoPi = 6.2831853071795864769252868;
inline constexpr double kLog2e = 1.4426950408889634073599247;
inline constexpr double kLn2Hi = 6.93147180369123816490e-01;
inline constexpr double kLn2Lo = 1.90821492927058770002e-10;
inline constexpr double kExpClamp = 700.0;

// atanh series for ln(m), m in [sqrt(1/2), sqrt(2)]: ln m = 2 s sum s^2k/(2k+1).
inline constexpr double kLogCoef[9] = {
    1.0 / 17.0, 1.0 / 15.0, 1.0 / 13.0, 1.0 / 11.0, 1.0 / 9.0,
    1.0 / 7.0,  1.0 / 5.0,  1.0 / 3.0,  1.0,
};

// sin(x)/x and cos(x) in x^2 on |x| <= pi/4, highest order first.
inline constexpr double kSinCoef[8] = {
    -1.0 / 1307674368000.0, 1.0 / 6227020800.0, -1.0 / 39916800.0, 1.0 / 362880.0,
    -1.0 / 5040.0,          1.0 / 120.0,        -1.0 / 6.0,        1.0,
};
inline constexpr double kCosCoef[9] = {
    1.0 / 20922789888000.0, -1.0 / 87178291200.0, 1.0 / 479001600.0,
    -1.0 / 3628800.0,       1.0 / 40320.0,        -1.0 / 720.0,
    1.0 / 24.0,             -1.0 / 2.0,           1.0,
};

// exp(r) on |r| <= ln2/2, degree 13.
inline constexpr double kExpCoef[14] = {
    1.0 / 6227020800.0, 1.0 / 479001600.0, 1.0 / 39916800.0, 1.0 / 3628800.0,
    1.0 / 362880.0,     1.0 / 40320.0,     1.0 / 5040.0,     1.0 / 720.0,
    1.0 / 120.0,        1.0 / 24.0,        1.0 / 6.0,        1.0 / 2.0,
    1.0,                1.0,
};

}  // namespace tesl::simd::poly

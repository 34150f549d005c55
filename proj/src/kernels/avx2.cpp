#include "mixture_layout.hpp"

#if defined(MACSHAPE_HAVE_AVX2)

#include <immintrin.h>

namespace macshape::detail {

namespace {

// log2 for positive normal doubles (inputs are floored at kDensityFloor, so
// subnormals, zeros, negatives, infs and NaNs never reach here).
// Split x = 2^e * m with m in [sqrt(1/2), sqrt(2)), then ln m via the atanh
// series 2s * sum z^j/(2j+1), s = (m-1)/(m+1), z = s^2. With |s| <= 0.1716
// the series truncated at z^9/19 leaves a remainder below 1e-17, so the
// result is accurate to a couple of ulps.
inline __m256d log2_pd(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);

    // Biased exponent of each lane, packed down to int32 and widened to double.
    const __m256i expo64 = _mm256_srli_epi64(bits, 52);
    const __m256i pack = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
    const __m128i expo32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(expo64, pack));
    __m256d e = _mm256_sub_pd(_mm256_cvtepi32_pd(expo32), _mm256_set1_pd(1023.0));

    // Mantissa in [1, 2), then halved where >= sqrt(2).
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));
    const __m256d above = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GE_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), above);
    e = _mm256_add_pd(e, _mm256_and_pd(above, _mm256_set1_pd(1.0)));

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d z = _mm256_mul_pd(s, s);
    __m256d poly = _mm256_set1_pd(1.0 / 19.0);
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 17.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 15.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 13.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 11.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 9.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 7.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 5.0));
    poly = _mm256_fmadd_pd(poly, z, _mm256_set1_pd(1.0 / 3.0));
    poly = _mm256_fmadd_pd(poly, z, one);
    const __m256d ln_m = _mm256_mul_pd(_mm256_add_pd(s, s), poly);

    // log2(x) = e + ln(m) * log2(e)
    return _mm256_fmadd_pd(ln_m, _mm256_set1_pd(1.4426950408889634), e);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// All spans handed to these ops are multiples of 4 wide (the layout pads and
// aligns every window), so there is no tail handling.
struct Avx2Ops {
    static void axpy(double a, const double* x, double* y, int n) {
        const __m256d va = _mm256_set1_pd(a);
        for (int i = 0; i < n; i += 4) {
            const __m256d vy =
                _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
            _mm256_storeu_pd(y + i, vy);
        }
    }

    static void add(const double* x, double* y, int n) {
        for (int i = 0; i < n; i += 4)
            _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }

    static void log2_floor(const double* x, double* y, int n) {
        const __m256d floor_v = _mm256_set1_pd(kDensityFloor);
        for (int i = 0; i < n; i += 4)
            _mm256_storeu_pd(y + i, log2_pd(_mm256_max_pd(_mm256_loadu_pd(x + i), floor_v)));
    }

    static double log_ratio_dot(const double* fc, const double* lf, double* lout, int n) {
        const __m256d floor_v = _mm256_set1_pd(kDensityFloor);
        __m256d acc = _mm256_setzero_pd();
        for (int i = 0; i < n; i += 4) {
            const __m256d vf = _mm256_loadu_pd(fc + i);
            const __m256d l = _mm256_sub_pd(log2_pd(_mm256_max_pd(vf, floor_v)),
                                            _mm256_loadu_pd(lf + i));
            _mm256_storeu_pd(lout + i, l);
            acc = _mm256_fmadd_pd(vf, l, acc);
        }
        return hsum(acc);
    }

    static void dot2(const double* x1, const double* x2, const double* w, int n, double& d1,
                     double& d2) {
        __m256d a = _mm256_setzero_pd(), b = _mm256_setzero_pd();
        for (int i = 0; i < n; i += 4) {
            const __m256d vw = _mm256_loadu_pd(w + i);
            a = _mm256_fmadd_pd(_mm256_loadu_pd(x1 + i), vw, a);
            b = _mm256_fmadd_pd(_mm256_loadu_pd(x2 + i), vw, b);
        }
        d1 = hsum(a);
        d2 = hsum(b);
    }
};

} // namespace

MixtureSums accumulate_avx2(const MixtureLayout& lay) { return run_mixture_loop<Avx2Ops>(lay); }

void avx2_log2_batch(const double* in, double* out, int n) {
    for (int i = 0; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, log2_pd(_mm256_loadu_pd(in + i)));
    if (const int rem = n % 4; rem != 0) {
        double tmp_in[4] = {1.0, 1.0, 1.0, 1.0}, tmp_out[4];
        for (int i = 0; i < rem; ++i) tmp_in[i] = in[n - rem + i];
        _mm256_storeu_pd(tmp_out, log2_pd(_mm256_loadu_pd(tmp_in)));
        for (int i = 0; i < rem; ++i) out[n - rem + i] = tmp_out[i];
    }
}

} // namespace macshape::detail

#endif // MACSHAPE_HAVE_AVX2

//! Vector primitives for the skip-gram step, behind a [`Kernel`] so the
//! training loop can be instantiated once per instruction set.

use num_traits::Float;

pub trait Kernel<F: Float>: Copy {
    fn dot(self, a: &[F], b: &[F]) -> F;
    /// `acc += g * out; out += step * inp` in one pass over `out`.
    fn fused_update(self, acc: &mut [F], out: &mut [F], inp: &[F], g: F, step: F);
    /// As [`Kernel::fused_update`] with `acc` overwritten instead of added to.
    #[inline]
    fn fused_init(self, acc: &mut [F], out: &mut [F], inp: &[F], g: F, step: F) {
        acc.iter_mut().for_each(|a| *a = F::zero());
        self.fused_update(acc, out, inp, g, step)
    }
    /// `y += a * x`.
    fn axpy(self, y: &mut [F], a: F, x: &[F]);
    /// Hint that `row` will be read soon.
    #[inline]
    fn prefetch(self, row: &[F]) {
        let _ = row;
    }
}

/// Plain loops; any float type, any target.
#[derive(Clone, Copy, Debug, Default)]
pub struct Portable;

const LANES: usize = 16;

impl<F: Float> Kernel<F> for Portable {
    /// 16 independent partial sums combined pairwise.
    #[inline]
    fn dot(self, a: &[F], b: &[F]) -> F {
        let mut acc = [F::zero(); LANES];
        let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
        let (ra, rb) = (ca.remainder(), cb.remainder());
        for (x, y) in ca.zip(cb) {
            for k in 0..LANES {
                acc[k] = acc[k] + x[k] * y[k];
            }
        }
        let mut width = LANES;
        while width > 1 {
            width /= 2;
            for k in 0..width {
                acc[k] = acc[k] + acc[k + width];
            }
        }
        let mut s = acc[0];
        for (x, y) in ra.iter().zip(rb) {
            s = s + *x * *y;
        }
        s
    }

    #[inline]
    fn fused_update(self, acc: &mut [F], out: &mut [F], inp: &[F], g: F, step: F) {
        for ((a, o), i) in acc.iter_mut().zip(out.iter_mut()).zip(inp) {
            *a = *a + g * *o;
            *o = *o + step * *i;
        }
    }

    #[inline]
    fn axpy(self, y: &mut [F], a: F, x: &[F]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = *yi + a * *xi;
        }
    }
}

#[cfg(target_arch = "x86_64")]
pub use x86::{Avx, Avx512, AvxFma, Sse};

#[cfg(target_arch = "x86_64")]
mod x86 {
    use super::{Kernel, Portable};
    use core::arch::x86_64::*;

    /// Touches every 64-byte line of `row`.
    #[inline]
    fn prefetch_lines<T>(row: &[T]) {
        let bytes = core::mem::size_of_val(row);
        let base = row.as_ptr() as *const i8;
        let mut off = 0;
        while off < bytes {
            // SAFETY: prefetch never faults and `base + off` stays inside `row`.
            unsafe { _mm_prefetch::<_MM_HINT_T0>(base.add(off)) };
            off += 64;
        }
    }

    /// 128-bit SSE, available on every x86_64 CPU.
    #[derive(Clone, Copy, Debug, Default)]
    pub struct Sse;

    /// 256-bit AVX. Only construct after checking the CPU supports it; the
    /// training loop using it must itself be compiled with `avx` enabled.
    #[derive(Clone, Copy, Debug)]
    pub struct Avx(());

    impl Avx {
        /// # Safety
        /// The running CPU must support AVX.
        pub unsafe fn new_unchecked() -> Self {
            Avx(())
        }
    }

    /// 256-bit AVX with fused multiply-add. Same contract as [`Avx`].
    #[derive(Clone, Copy, Debug)]
    pub struct AvxFma(());

    impl AvxFma {
        /// # Safety
        /// The running CPU must support AVX and FMA.
        pub unsafe fn new_unchecked() -> Self {
            AvxFma(())
        }
    }

    impl Kernel<f32> for AvxFma {
        #[inline]
        fn dot(self, a: &[f32], b: &[f32]) -> f32 {
            // SAFETY: an `AvxFma` value only exists once AVX and FMA support was established.
            unsafe { fma_dot(a, b) }
        }

        #[inline]
        fn fused_update(self, acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
            // SAFETY: as above.
            unsafe { fma_fused(acc, out, inp, g, step) }
        }

        #[inline]
        fn axpy(self, y: &mut [f32], a: f32, x: &[f32]) {
            Portable.axpy(y, a, x)
        }

        #[inline]
        fn prefetch(self, row: &[f32]) {
            prefetch_lines(row)
        }
    }

    impl Kernel<f32> for Sse {
        #[inline]
        fn dot(self, a: &[f32], b: &[f32]) -> f32 {
            let n = a.len().min(b.len());
            let blocks = n / 16;
            // SAFETY: each load reads 4 floats at offset < 16 * blocks <= n.
            let mut total = unsafe {
                let (pa, pb) = (a.as_ptr(), b.as_ptr());
                let mut s = [_mm_setzero_ps(); 4];
                for i in 0..blocks {
                    for (j, acc) in s.iter_mut().enumerate() {
                        let o = i * 16 + j * 4;
                        *acc = _mm_add_ps(*acc, _mm_mul_ps(_mm_loadu_ps(pa.add(o)), _mm_loadu_ps(pb.add(o))));
                    }
                }
                let v = _mm_add_ps(_mm_add_ps(s[0], s[1]), _mm_add_ps(s[2], s[3]));
                let mut lanes = [0f32; 4];
                _mm_storeu_ps(lanes.as_mut_ptr(), v);
                (lanes[0] + lanes[1]) + (lanes[2] + lanes[3])
            };
            for k in blocks * 16..n {
                total += a[k] * b[k];
            }
            total
        }

        #[inline]
        fn fused_update(self, acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
            let n = acc.len().min(out.len()).min(inp.len());
            let blocks = n / 4;
            // SAFETY: offsets stay below 4 * blocks <= n for all three slices,
            // and `acc` / `out` are distinct exclusive borrows.
            unsafe {
                let (pa, po, pi) = (acc.as_mut_ptr(), out.as_mut_ptr(), inp.as_ptr());
                let (vg, vs) = (_mm_set1_ps(g), _mm_set1_ps(step));
                for i in 0..blocks {
                    let o = i * 4;
                    let ov = _mm_loadu_ps(po.add(o));
                    _mm_storeu_ps(pa.add(o), _mm_add_ps(_mm_loadu_ps(pa.add(o)), _mm_mul_ps(vg, ov)));
                    _mm_storeu_ps(po.add(o), _mm_add_ps(ov, _mm_mul_ps(vs, _mm_loadu_ps(pi.add(o)))));
                }
            }
            for k in blocks * 4..n {
                acc[k] += g * out[k];
                out[k] += step * inp[k];
            }
        }

        #[inline]
        fn axpy(self, y: &mut [f32], a: f32, x: &[f32]) {
            Portable.axpy(y, a, x)
        }

        #[inline]
        fn prefetch(self, row: &[f32]) {
            prefetch_lines(row)
        }
    }

    #[inline]
    #[target_feature(enable = "avx")]
    fn avx_dot(a: &[f32], b: &[f32]) -> f32 {
        let n = a.len().min(b.len());
        let blocks = n / 32;
        // SAFETY: each load reads 8 floats at offset < 32 * blocks <= n.
        let mut total = unsafe {
            let (pa, pb) = (a.as_ptr(), b.as_ptr());
            let mut s = [_mm256_setzero_ps(); 4];
            for i in 0..blocks {
                for (j, acc) in s.iter_mut().enumerate() {
                    let o = i * 32 + j * 8;
                    *acc = _mm256_add_ps(*acc, _mm256_mul_ps(_mm256_loadu_ps(pa.add(o)), _mm256_loadu_ps(pb.add(o))));
                }
            }
            let v = _mm256_add_ps(_mm256_add_ps(s[0], s[1]), _mm256_add_ps(s[2], s[3]));
            let mut lanes = [0f32; 8];
            _mm256_storeu_ps(lanes.as_mut_ptr(), v);
            ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
        };
        for k in blocks * 32..n {
            total += a[k] * b[k];
        }
        total
    }

    #[inline]
    #[target_feature(enable = "avx")]
    fn avx_fused(acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
        let n = acc.len().min(out.len()).min(inp.len());
        let blocks = n / 8;
        // SAFETY: offsets stay below 8 * blocks <= n for all three slices,
        // and `acc` / `out` are distinct exclusive borrows.
        unsafe {
            let (pa, po, pi) = (acc.as_mut_ptr(), out.as_mut_ptr(), inp.as_ptr());
            let (vg, vs) = (_mm256_set1_ps(g), _mm256_set1_ps(step));
            for i in 0..blocks {
                let o = i * 8;
                let ov = _mm256_loadu_ps(po.add(o));
                _mm256_storeu_ps(pa.add(o), _mm256_add_ps(_mm256_loadu_ps(pa.add(o)), _mm256_mul_ps(vg, ov)));
                _mm256_storeu_ps(po.add(o), _mm256_add_ps(ov, _mm256_mul_ps(vs, _mm256_loadu_ps(pi.add(o)))));
            }
        }
        for k in blocks * 8..n {
            acc[k] += g * out[k];
            out[k] += step * inp[k];
        }
    }

    #[inline]
    #[target_feature(enable = "avx,fma")]
    fn fma_dot(a: &[f32], b: &[f32]) -> f32 {
        let n = a.len().min(b.len());
        let blocks = n / 32;
        // SAFETY: each load reads 8 floats at offset < 32 * blocks <= n.
        let mut total = unsafe {
            let (pa, pb) = (a.as_ptr(), b.as_ptr());
            let mut s = [_mm256_setzero_ps(); 4];
            for i in 0..blocks {
                for (j, acc) in s.iter_mut().enumerate() {
                    let o = i * 32 + j * 8;
                    *acc = _mm256_fmadd_ps(_mm256_loadu_ps(pa.add(o)), _mm256_loadu_ps(pb.add(o)), *acc);
                }
            }
            let v = _mm256_add_ps(_mm256_add_ps(s[0], s[1]), _mm256_add_ps(s[2], s[3]));
            let mut lanes = [0f32; 8];
            _mm256_storeu_ps(lanes.as_mut_ptr(), v);
            ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]))
        };
        for k in blocks * 32..n {
            total = a[k].mul_add(b[k], total);
        }
        total
    }

    #[inline]
    #[target_feature(enable = "avx,fma")]
    fn fma_fused(acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
        let n = acc.len().min(out.len()).min(inp.len());
        let blocks = n / 8;
        // SAFETY: offsets stay below 8 * blocks <= n for all three slices,
        // and `acc` / `out` are distinct exclusive borrows.
        unsafe {
            let (pa, po, pi) = (acc.as_mut_ptr(), out.as_mut_ptr(), inp.as_ptr());
            let (vg, vs) = (_mm256_set1_ps(g), _mm256_set1_ps(step));
            for i in 0..blocks {
                let o = i * 8;
                let ov = _mm256_loadu_ps(po.add(o));
                _mm256_storeu_ps(pa.add(o), _mm256_fmadd_ps(vg, ov, _mm256_loadu_ps(pa.add(o))));
                _mm256_storeu_ps(po.add(o), _mm256_fmadd_ps(vs, _mm256_loadu_ps(pi.add(o)), ov));
            }
        }
        for k in blocks * 8..n {
            acc[k] = g.mul_add(out[k], acc[k]);
            out[k] = step.mul_add(inp[k], out[k]);
        }
    }

    #[inline]
    #[target_feature(enable = "avx512f")]
    fn avx512_dot(a: &[f32], b: &[f32]) -> f32 {
        let n = a.len().min(b.len());
        let blocks = n / 32;
        // SAFETY: each load reads 16 floats at offset < 32 * blocks <= n.
        let mut total = unsafe {
            let (pa, pb) = (a.as_ptr(), b.as_ptr());
            let mut s = [_mm512_setzero_ps(); 2];
            for i in 0..blocks {
                for (j, acc) in s.iter_mut().enumerate() {
                    let o = i * 32 + j * 16;
                    *acc = _mm512_fmadd_ps(_mm512_loadu_ps(pa.add(o)), _mm512_loadu_ps(pb.add(o)), *acc);
                }
            }
            _mm512_reduce_add_ps(_mm512_add_ps(s[0], s[1]))
        };
        for k in blocks * 32..n {
            total = a[k].mul_add(b[k], total);
        }
        total
    }

    #[inline]
    #[target_feature(enable = "avx512f")]
    fn avx512_fused<const ADD: bool>(acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
        let n = acc.len().min(out.len()).min(inp.len());
        let blocks = n / 16;
        // SAFETY: offsets stay below 16 * blocks <= n for all three slices,
        // and `acc` / `out` are distinct exclusive borrows.
        unsafe {
            let (pa, po, pi) = (acc.as_mut_ptr(), out.as_mut_ptr(), inp.as_ptr());
            let (vg, vs) = (_mm512_set1_ps(g), _mm512_set1_ps(step));
            for i in 0..blocks {
                let o = i * 16;
                let ov = _mm512_loadu_ps(po.add(o));
                let prior = if ADD { _mm512_loadu_ps(pa.add(o)) } else { _mm512_setzero_ps() };
                _mm512_storeu_ps(pa.add(o), _mm512_fmadd_ps(vg, ov, prior));
                _mm512_storeu_ps(po.add(o), _mm512_fmadd_ps(vs, _mm512_loadu_ps(pi.add(o)), ov));
            }
        }
        for k in blocks * 16..n {
            acc[k] = g.mul_add(out[k], if ADD { acc[k] } else { 0.0 });
            out[k] = step.mul_add(inp[k], out[k]);
        }
    }

    /// 512-bit AVX-512F kernel. Same contract as [`Avx`].
    #[derive(Clone, Copy, Debug)]
    pub struct Avx512(());

    impl Avx512 {
        /// # Safety
        /// The running CPU must support AVX-512F.
        pub unsafe fn new_unchecked() -> Self {
            Avx512(())
        }
    }

    impl Kernel<f32> for Avx512 {
        #[inline]
        fn dot(self, a: &[f32], b: &[f32]) -> f32 {
            // SAFETY: an `Avx512` value only exists once AVX-512F support was established.
            unsafe { avx512_dot(a, b) }
        }

        #[inline]
        fn fused_update(self, acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
            // SAFETY: as above.
            unsafe { avx512_fused::<true>(acc, out, inp, g, step) }
        }

        #[inline]
        fn fused_init(self, acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
            // SAFETY: as above.
            unsafe { avx512_fused::<false>(acc, out, inp, g, step) }
        }

        #[inline]
        fn axpy(self, y: &mut [f32], a: f32, x: &[f32]) {
            Portable.axpy(y, a, x)
        }

        #[inline]
        fn prefetch(self, row: &[f32]) {
            prefetch_lines(row)
        }
    }

    impl Kernel<f32> for Avx {
        #[inline]
        fn dot(self, a: &[f32], b: &[f32]) -> f32 {
            // SAFETY: an `Avx` value only exists once AVX support was established.
            unsafe { avx_dot(a, b) }
        }

        #[inline]
        fn fused_update(self, acc: &mut [f32], out: &mut [f32], inp: &[f32], g: f32, step: f32) {
            // SAFETY: as above.
            unsafe { avx_fused(acc, out, inp, g, step) }
        }

        #[inline]
        fn axpy(self, y: &mut [f32], a: f32, x: &[f32]) {
            Portable.axpy(y, a, x)
        }

        #[inline]
        fn prefetch(self, row: &[f32]) {
            prefetch_lines(row)
        }
    }
}

/// Widest x86_64 kernel the running CPU supports. Without the `std`
/// feature there is no runtime detection and SSE is used.
#[cfg(target_arch = "x86_64")]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(not(feature = "std"), allow(dead_code))]
pub enum X86Level {
    Sse,
    Avx,
    AvxFma,
    Avx512,
}

#[cfg(target_arch = "x86_64")]
pub fn x86_level() -> X86Level {
    #[cfg(feature = "std")]
    {
        if std::is_x86_feature_detected!("avx512f") {
            return X86Level::Avx512;
        }
        if std::is_x86_feature_detected!("avx") && std::is_x86_feature_detected!("fma") {
            return X86Level::AvxFma;
        }
        if std::is_x86_feature_detected!("avx") {
            return X86Level::Avx;
        }
    }
    X86Level::Sse
}

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::Float;

use crate::encoder::{EncodedFrame, CHANNELS};
use crate::error::{Error, Result};

/// Scalar type the network runs in: `f32` for training, `f64` for gradient checks.
pub trait Real: Float + Default + Debug + Send + Sync + Sum + 'static {
    /// `c = alpha * a · b + beta * c` on strided row/column views.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: isize,
        csa: isize,
        b: &[Self],
        rsb: isize,
        csb: isize,
        beta: Self,
        c: &mut [Self],
        rsc: isize,
        csc: isize,
    );

    fn of(v: f64) -> Self {
        Self::from(v).expect("representable")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("finite")
    }
}

macro_rules! impl_real {
    ($t:ty, $gemm:path) => {
        impl Real for $t {
            fn gemm(
                m: usize,
                k: usize,
                n: usize,
                alpha: Self,
                a: &[Self],
                rsa: isize,
                csa: isize,
                b: &[Self],
                rsb: isize,
                csb: isize,
                beta: Self,
                c: &mut [Self],
                rsc: isize,
                csc: isize,
            ) {
                if m == 0 || n == 0 {
                    return;
                }
                let span = |rows: usize, cols: usize, rs: isize, cs: isize| {
                    (rows.saturating_sub(1) as isize * rs + cols.saturating_sub(1) as isize * cs) as usize + 1
                };
                if k > 0 {
                    assert!(a.len() >= span(m, k, rsa, csa), "gemm: a too short");
                    assert!(b.len() >= span(k, n, rsb, csb), "gemm: b too short");
                }
                assert!(c.len() >= span(m, n, rsc, csc), "gemm: c too short");
                // SAFETY: the asserts above keep every strided access inside the slices.
                unsafe {
                    $gemm(
                        m, k, n, alpha, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta,
                        c.as_mut_ptr(), rsc, csc,
                    )
                }
            }
        }
    };
}

impl_real!(f32, matrixmultiply::sgemm);
impl_real!(f64, matrixmultiply::dgemm);

/// Row-major matrix product `c (+)= op(a) · op(b)` where `op` optionally
/// transposes. `a` is stored as `m×k` (or `k×m` when `ta`), `b` as `k×n`
/// (or `n×k` when `tb`).
#[allow(clippy::too_many_arguments)]
pub fn matmul<R: Real>(m: usize, k: usize, n: usize, a: &[R], ta: bool, b: &[R], tb: bool, c: &mut [R], accumulate: bool) {
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { R::one() } else { R::zero() };
    R::gemm(m, k, n, R::one(), a, rsa, csa, b, rsb, csb, beta, c, n as isize, 1);
}

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<R> {
    pub shape: Vec<usize>,
    pub data: Vec<R>,
}

impl<R: Real> Tensor<R> {
    pub fn new(shape: Vec<usize>, data: Vec<R>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!("shape {shape:?} needs {n} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![R::zero(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<S: Real>(&self) -> Tensor<S> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| S::of(v.f64())).collect(),
        }
    }
}

/// Overlap weights mapping `src` cells onto `dst` equal-area cells:
/// `(dst index, src index, weight)` with weights of each `dst` summing to 1.
fn area_weights(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let mut out = Vec::new();
    for o in 0..dst {
        let lo = o as f64 * scale;
        let hi = lo + scale;
        let mut s = lo.floor() as usize;
        while (s as f64) < hi && s < src {
            let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
            if overlap > 0.0 {
                out.push((o, s, overlap / scale));
            }
            s += 1;
        }
    }
    out
}

/// Area-average pooling of each channel to `out = (height, width)`.
pub fn downsample_input(frame: &EncodedFrame, out: (usize, usize)) -> Result<Tensor<f32>> {
    let (oh, ow) = out;
    let (h, w) = (frame.height as usize, frame.width as usize);
    if oh == 0 || ow == 0 || oh > h || ow > w {
        return Err(Error::Shape(format!("cannot pool {h}x{w} frame to {oh}x{ow}")));
    }
    if (oh, ow) == (h, w) {
        return Tensor::new(vec![CHANNELS, h, w], frame.channels.clone());
    }
    let wy = area_weights(h, oh);
    let wx = area_weights(w, ow);
    let mut data = vec![0.0f64; CHANNELS * oh * ow];
    let mut rows = vec![0.0f64; oh * w];
    for c in 0..CHANNELS {
        let plane = &frame.channels[c * h * w..(c + 1) * h * w];
        rows.iter_mut().for_each(|v| *v = 0.0);
        for &(o, s, k) in &wy {
            for x in 0..w {
                rows[o * w + x] += k * f64::from(plane[s * w + x]);
            }
        }
        let dst = &mut data[c * oh * ow..(c + 1) * oh * ow];
        for y in 0..oh {
            for &(o, s, k) in &wx {
                dst[y * ow + o] += k * rows[y * w + s];
            }
        }
    }
    Tensor::new(
        vec![CHANNELS, oh, ow],
        data.into_iter().map(|v| v.clamp(0.0, 1.0) as f32).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_transposes() {
        // a = [[1,2,3],[4,5,6]], b = [[1,0],[0,1],[1,1]]
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0f64];
        let b = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0f64];
        let mut c = [0.0; 4];
        matmul(2, 3, 2, &a, false, &b, false, &mut c, false);
        assert_eq!(c, [4.0, 5.0, 10.0, 11.0]);
        // aᵀ stored as 3x2, bᵀ stored as 2x3
        let at = [1.0, 4.0, 2.0, 5.0, 3.0, 6.0f64];
        let bt = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0f64];
        let mut d = [1.0; 4];
        matmul(2, 3, 2, &at, true, &bt, true, &mut d, true);
        assert_eq!(d, [5.0, 6.0, 11.0, 12.0]);
    }

    #[test]
    fn downsample_constant_and_mean() {
        let mut f = EncodedFrame::blank(8, 8, 0);
        f.channels.iter_mut().for_each(|v| *v = 0.25);
        let t = downsample_input(&f, (3, 5)).unwrap();
        assert_eq!(t.shape, vec![6, 3, 5]);
        assert!(t.data.iter().all(|&v| (v - 0.25).abs() < 1e-7));

        let mut g = EncodedFrame::blank(8, 8, 0);
        g.channels.iter_mut().enumerate().for_each(|(i, v)| *v = ((i * 37) % 101) as f32 / 100.0);
        for out in [(4, 4), (3, 5), (1, 1), (7, 2)] {
            let t = downsample_input(&g, out).unwrap();
            for c in 0..6 {
                let src: f64 = g.channels[c * 64..(c + 1) * 64].iter().map(|&v| f64::from(v)).sum::<f64>() / 64.0;
                let n = out.0 * out.1;
                let dst: f64 = t.data[c * n..(c + 1) * n].iter().map(|&v| f64::from(v)).sum::<f64>() / n as f64;
                assert!((src - dst).abs() < 1e-6, "{out:?} channel {c}: {src} vs {dst}");
            }
        }
    }

    #[test]
    fn downsample_two_by_two_mean() {
        let mut f = EncodedFrame::blank(2, 2, 0);
        for c in 0..6 {
            f.channels[c * 4..c * 4 + 4].copy_from_slice(&[0.0, 0.0, 1.0, 1.0]);
        }
        let t = downsample_input(&f, (1, 1)).unwrap();
        assert_eq!(t.data, vec![0.5; 6]);
        assert!(downsample_input(&f, (3, 1)).is_err());
    }
}

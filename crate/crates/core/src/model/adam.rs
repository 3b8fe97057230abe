use serde::{Deserialize, Serialize};

use super::tensor::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<R> {
    pub m: Vec<R>,
    pub v: Vec<R>,
    pub step: u64,
}

impl<R: Real> AdamState<R> {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![R::zero(); n],
            v: vec![R::zero(); n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update. Non-finite gradients abort before any
/// parameter is touched.
pub fn adam_step<R: Real>(params: &mut [R], grads: &[R], state: &mut AdamState<R>, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != state.v.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some((i, g)) = grads.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        let bad = grads.iter().filter(|g| !g.is_finite()).count();
        return Err(Error::NonFinite(format!(
            "gradient {i} is {g:?} at step {} ({bad} of {} entries non-finite)",
            state.step + 1,
            grads.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (R::of(cfg.beta1), R::of(cfg.beta2));
    let c1 = R::of(1.0 - cfg.beta1.powi(t));
    let c2 = R::of(1.0 - cfg.beta2.powi(t));
    let (lr, eps) = (R::of(cfg.lr), R::of(cfg.eps));
    let one = R::one();
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = vec![0.5f64, -1.0, 2.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, &AdamConfig::default()).unwrap();
        assert_eq!(p, vec![0.5, -1.0, 2.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![0.0f64; 4];
        let mut s = AdamState::new(4);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &[1.0; 4], &mut s, &cfg).unwrap();
        // m_hat = v_hat = 1, update = lr / (1 + eps)
        for v in p {
            assert!((v + cfg.lr).abs() < 1e-10);
        }
    }

    #[test]
    fn repeated_runs_match() {
        let run = || {
            let mut p = vec![0.1f32, 0.2, 0.3];
            let mut s = AdamState::new(3);
            for k in 0..50 {
                let g: Vec<f32> = p.iter().map(|&x| x * 2.0 - 0.01 * k as f32).collect();
                adam_step(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nan_gradient_aborts_untouched() {
        let mut p = vec![1.0f64, 2.0];
        let mut s = AdamState::new(2);
        let err = adam_step(&mut p, &[0.1, f64::NAN], &mut s, &AdamConfig::default()).unwrap_err();
        assert!(err.to_string().contains("gradient 1"));
        assert_eq!(p, vec![1.0, 2.0]);
        assert_eq!(s.step, 0);
    }
}

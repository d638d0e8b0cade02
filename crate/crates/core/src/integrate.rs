//! Fixed-step classical Runge–Kutta for vectors of nonnegative powers.

use crate::error::{Error, Result};

/// Reusable RK4 stage buffers.
///
/// State entries are powers, so negative stage values are clamped to zero;
/// [`Rk4::clamps`] counts how often that happened. A leading block of
/// entries can be exempted for states such as log-gains.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k: [Vec<f64>; 4],
    tmp: Vec<f64>,
    free: usize,
    clamps: u64,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self::with_free_prefix(dim, 0)
    }

    /// The first `free` entries may go negative.
    pub fn with_free_prefix(dim: usize, free: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            free: free.min(dim),
            clamps: 0,
        }
    }

    pub fn clamps(&self) -> u64 {
        self.clamps
    }

    fn clamp(v: &mut [f64], count: &mut u64) {
        for x in v.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
                *count += 1;
            }
        }
    }

    fn eval<F>(rhs: &mut F, z: f64, y: &[f64], out: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        rhs(z, y, out);
        match out.iter().position(|d| !d.is_finite()) {
            Some(index) => Err(Error::NonFinite { z, index }),
            None => Ok(()),
        }
    }

    /// Advances `y` from `z` to `z + dz`.
    pub fn step<F>(&mut self, rhs: &mut F, z: f64, dz: f64, y: &mut [f64]) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;
        Self::eval(rhs, z, y, k1)?;
        for j in 0..y.len() {
            tmp[j] = y[j] + 0.5 * dz * k1[j];
        }
        Self::clamp(&mut tmp[self.free..], &mut self.clamps);
        Self::eval(rhs, z + 0.5 * dz, tmp, k2)?;
        for j in 0..y.len() {
            tmp[j] = y[j] + 0.5 * dz * k2[j];
        }
        Self::clamp(&mut tmp[self.free..], &mut self.clamps);
        Self::eval(rhs, z + 0.5 * dz, tmp, k3)?;
        for j in 0..y.len() {
            tmp[j] = y[j] + dz * k3[j];
        }
        Self::clamp(&mut tmp[self.free..], &mut self.clamps);
        Self::eval(rhs, z + dz, tmp, k4)?;
        for j in 0..y.len() {
            y[j] += dz / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        Self::clamp(&mut y[self.free..], &mut self.clamps);
        Ok(())
    }

    /// Derivative from the last step's first stage, i.e. at its start.
    pub fn last_slope(&self) -> &[f64] {
        &self.k[0]
    }
}

/// One RK4 step on a scalar-free closure, for callers without a buffer.
pub fn rk4_step<F>(mut rhs: F, y: &[f64], z: f64, dz: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dz > 0.0) {
        return Err(Error::domain("step size must be positive"));
    }
    let mut out = y.to_vec();
    Rk4::new(y.len()).step(&mut rhs, z, dz, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(alpha: f64) -> impl FnMut(f64, &[f64], &mut [f64]) {
        move |_, y, d| d[0] = -alpha * y[0]
    }

    #[test]
    fn constant_rate_is_exact() {
        let y = rk4_step(|_, _, d: &mut [f64]| d[0] = 2.5, &[1.0], 0.0, 0.4).unwrap();
        assert_eq!(y[0], 2.0);
    }

    #[test]
    fn one_step_decay_error_is_fifth_order() {
        for dz in [0.1, 0.05] {
            let y = rk4_step(decay(1.0), &[1.0], 0.0, dz).unwrap();
            let err = (y[0] - (-dz).exp()).abs();
            assert!(err < dz.powi(5) / 100.0, "{err}");
        }
    }

    #[test]
    fn halving_step_gains_sixteen() {
        let run = |steps: usize| {
            let mut rk = Rk4::new(1);
            let mut y = [1.0];
            let dz = 2.0 / steps as f64;
            let mut f = decay(1.0);
            for s in 0..steps {
                rk.step(&mut f, s as f64 * dz, dz, &mut y).unwrap();
            }
            (y[0] - (-2.0f64).exp()).abs()
        };
        let ratio = run(20) / run(40);
        assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
    }

    #[test]
    fn non_finite_is_located() {
        let err = rk4_step(|_, _, d: &mut [f64]| { d[0] = 0.0; d[1] = f64::NAN }, &[1.0, 1.0], 3.0, 1.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { z, index: 1 } if z == 3.0));
        assert!(rk4_step(decay(1.0), &[1.0], 0.0, 0.0).is_err());
    }

    #[test]
    fn negative_stages_are_clamped() {
        let mut rk = Rk4::new(1);
        let mut y = [1.0];
        rk.step(&mut |_, _, d: &mut [f64]| d[0] = -10.0, 0.0, 1.0, &mut y).unwrap();
        assert_eq!(y[0], 0.0);
        assert!(rk.clamps() > 0);
        let mut rk = Rk4::with_free_prefix(2, 1);
        let mut y = [1.0, 1.0];
        rk.step(&mut |_, _, d: &mut [f64]| d.fill(-10.0), 0.0, 1.0, &mut y).unwrap();
        assert_eq!(y, [-9.0, 0.0]);
    }
}

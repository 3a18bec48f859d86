//! Independent reference integrator for the momentum ladder.
#![allow(dead_code)]

use num_complex::Complex64 as C;

/// Ladder written out by hand: energies `diag[j]`, nearest-neighbour
/// coupling `off` (neighbours differ by two momentum units).
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: f64,
}

impl Tridiagonal {
    /// `diag[j] = w·m(m + shift)` for `m` in `m_min, m_min + 2, ...`.
    pub fn quadratic(w: f64, shift: i32, m_min: i32, len: usize, chi_n: f64) -> Self {
        let diag = (0..len)
            .map(|j| {
                let m = f64::from(m_min + 2 * j as i32);
                w * m * (m + f64::from(shift))
            })
            .collect();
        Tridiagonal {
            diag,
            off: -chi_n / 2.0,
        }
    }

    fn rhs(&self, c: &[C], out: &mut [C]) {
        let n = c.len();
        for j in 0..n {
            let mut h = c[j] * self.diag[j];
            if j > 0 {
                h += c[j - 1] * self.off;
            }
            if j + 1 < n {
                h += c[j + 1] * self.off;
            }
            out[j] = C::new(h.im, -h.re);
        }
    }

    /// Classical fourth-order Runge-Kutta with `steps` equal steps.
    pub fn rk4(&self, c0: &[C], t: f64, steps: usize) -> Vec<C> {
        let n = c0.len();
        let h = t / steps as f64;
        let mut c = c0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4) =
            (vec![C::default(); n], vec![C::default(); n], vec![C::default(); n], vec![C::default(); n]);
        let mut tmp = vec![C::default(); n];
        for _ in 0..steps {
            self.rhs(&c, &mut k1);
            for j in 0..n {
                tmp[j] = c[j] + k1[j] * (h / 2.0);
            }
            self.rhs(&tmp, &mut k2);
            for j in 0..n {
                tmp[j] = c[j] + k2[j] * (h / 2.0);
            }
            self.rhs(&tmp, &mut k3);
            for j in 0..n {
                tmp[j] = c[j] + k3[j] * h;
            }
            self.rhs(&tmp, &mut k4);
            for j in 0..n {
                c[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
            }
        }
        c
    }

    /// RK4 refined by step doubling until two passes agree to `tol`.
    pub fn converged(&self, c0: &[C], t: f64, tol: f64) -> Vec<C> {
        let stiff = self.diag.iter().fold(0.0f64, |a, d| a.max(d.abs())) + 2.0 * self.off.abs();
        let mut steps = ((stiff * t / 0.1).ceil() as usize).max(64);
        let mut prev = self.rk4(c0, t, steps);
        loop {
            steps *= 2;
            let next = self.rk4(c0, t, steps);
            let diff = max_diff(&prev, &next);
            prev = next;
            if diff < tol {
                return prev;
            }
            assert!(steps < 1 << 26, "reference integrator failed to converge");
        }
    }
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Unit vector at index `j`.
pub fn unit(len: usize, j: usize) -> Vec<C> {
    let mut v = vec![C::default(); len];
    v[j] = C::new(1.0, 0.0);
    v
}

//! Angular parts `Ω` on `S^{d-1}` and their size functionals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of `Ω` on a uniform angular grid.
///
/// `d = 1`: `[Ω(+1), Ω(-1)]`. `d = 2`: `Ω(θ_k)` at `θ_k = 2πk/M` with `M`
/// even, so that `-θ_k` is again a sample and `Ω*` is exact. The mean is
/// removed on construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSpec {
    pub d: usize,
    pub samples: Vec<Complex64>,
    pub q: f64,
}

impl OmegaSpec {
    pub fn new(d: usize, samples: Vec<Complex64>, q: f64) -> Result<Self> {
        match d {
            1 if samples.len() != 2 => {
                return Err(Error::InvalidParameter("d = 1 needs the two values Ω(+1), Ω(-1)".into()))
            }
            2 if samples.len() < 2 || samples.len() % 2 != 0 => {
                return Err(Error::InvalidParameter(format!(
                    "d = 2 needs an even number of angular samples, got {}",
                    samples.len()
                )))
            }
            1 | 2 => {}
            _ => return Err(Error::InvalidParameter(format!("dimension must be 1 or 2, got {d}"))),
        }
        if !(q > 1.0) {
            return Err(Error::BadExponent(q));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("Ω samples must be finite".into()));
        }
        let mean = samples.iter().sum::<Complex64>() / samples.len() as f64;
        let samples = samples.into_iter().map(|z| z - mean).collect();
        Ok(Self { d, samples, q })
    }

    /// `Ω(±1) = ±1` (Hilbert transform kernel up to `π`).
    pub fn sign() -> Self {
        Self { d: 1, samples: vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)], q: f64::INFINITY }
    }

    /// Zero-mean angular profile built from three narrow bumps with
    /// complex amplitudes; for `d = 1` the profile is read at `θ = 0, π`.
    pub fn three_bump(d: usize, m: usize, q: f64) -> Result<Self> {
        let bumps = [
            (0.3, 0.35, Complex64::new(2.5, 0.0)),
            (2.2, 0.2, Complex64::new(-1.0, 1.5)),
            (4.4, 0.5, Complex64::new(0.5, -1.0)),
        ];
        let profile = |theta: f64| -> Complex64 {
            bumps
                .iter()
                .map(|&(c, w, a)| {
                    let dist = angular_distance(theta, c);
                    if dist < w {
                        // integrable singularity at the bump centre keeps Ω outside L^∞
                        a * (w / dist.max(1e-3)).powf(0.3)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .sum()
        };
        let samples: Vec<Complex64> = match d {
            1 => vec![profile(0.0), profile(std::f64::consts::PI)],
            _ => (0..m).map(|k| profile(std::f64::consts::TAU * k as f64 / m as f64)).collect(),
        };
        Self::new(d, samples, q)
    }

    /// Samples from CSV lines `angle,re,im` (optional header), angles in
    /// radians on the uniform grid (`0, π` for `d = 1`).
    pub fn from_csv(d: usize, text: &str, q: f64) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::InvalidParameter(format!("expected angle,re,im in line '{line}'")));
            }
            let parsed: std::result::Result<Vec<f64>, _> = parts.iter().map(|s| s.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push((v[0], Complex64::new(v[1], v[2]))),
                Err(_) if rows.is_empty() => continue,
                Err(e) => return Err(Error::InvalidParameter(format!("bad number in '{line}': {e}"))),
            }
        }
        let m = rows.len();
        let step = if d == 1 { std::f64::consts::PI } else { std::f64::consts::TAU / m.max(1) as f64 };
        for (k, (angle, _)) in rows.iter().enumerate() {
            if (angle - step * k as f64).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!("angle {angle} is not the uniform sample {k}")));
            }
        }
        Self::new(d, rows.into_iter().map(|r| r.1).collect(), q)
    }

    pub fn m(&self) -> usize {
        self.samples.len()
    }

    /// `Ω*(θ) = conj(Ω(-θ))`.
    pub fn adjoint(&self) -> Self {
        let m = self.m();
        let samples = (0..m).map(|k| self.samples[(k + m / 2) % m].conj()).collect();
        Self { d: self.d, samples, q: self.q }
    }

    pub fn scaled(&self, lambda: Complex64) -> Self {
        Self { d: self.d, samples: self.samples.iter().map(|z| z * lambda).collect(), q: self.q }
    }

    /// Sample index for a nonzero vector. Vectors in the lower half-plane
    /// map through their negatives, which keeps `index(-z) = index(z) + M/2`
    /// exact even at rounding ties.
    pub fn index(&self, z: [f64; 2]) -> usize {
        let m = self.m();
        if self.d == 1 {
            return if z[0] > 0.0 { 0 } else { 1 };
        }
        let upper = z[1] > 0.0 || (z[1] == 0.0 && z[0] > 0.0);
        if !upper {
            return (self.index([-z[0], -z[1]]) + m / 2) % m;
        }
        let theta = z[1].atan2(z[0]);
        ((theta * m as f64 / std::f64::consts::TAU).round() as usize) % m
    }

    /// Nearest-sample value of `Ω(z / |z|)`.
    pub fn at(&self, z: [f64; 2]) -> Complex64 {
        self.samples[self.index(z)]
    }

    /// Quadrature weight of one sample (`|S^0| = 2`, `|S^1| = 2π`).
    pub fn weight(&self) -> f64 {
        if self.d == 1 {
            1.0
        } else {
            std::f64::consts::TAU / self.m() as f64
        }
    }

    /// `||Ω||_{L^q(S^{d-1})}`; `q = inf` gives the max modulus.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        (self.samples.iter().map(|z| z.norm().powf(q)).sum::<f64>() * self.weight()).powf(1.0 / q)
    }

    pub fn mean(&self) -> Complex64 {
        self.samples.iter().sum::<Complex64>() * self.weight()
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(std::f64::consts::TAU);
    t.min(std::f64::consts::TAU - t)
}

/// `∫ log(e + t) dt = (e + t) ln(e + t) - t`.
fn log_antiderivative(t: f64) -> f64 {
    let e = std::f64::consts::E;
    (e + t) * (e + t).ln() - t
}

/// `q ∫_0^∞ log(e + t) |{|Ω| > t}|^{1/q} dt`, exact for piecewise-constant `Ω`.
pub fn lorentz_log_bracket(omega: &OmegaSpec, q: f64) -> Result<f64> {
    if !(q > 1.0) || q.is_infinite() {
        return Err(Error::BadExponent(q));
    }
    let mut mods: Vec<f64> = omega.samples.iter().map(|z| z.norm()).collect();
    mods.sort_by(f64::total_cmp);
    let w = omega.weight();
    let mut total = 0.0;
    let mut prev = 0.0;
    for (j, &a) in mods.iter().enumerate() {
        if a > prev {
            // on (prev, a) exactly the samples j.. exceed t
            let measure = (mods.len() - j) as f64 * w;
            total += measure.powf(1.0 / q) * (log_antiderivative(a) - log_antiderivative(prev));
            prev = a;
        }
    }
    Ok(q * total)
}

/// Relative tolerance of the bisection for the homogeneous norm.
pub const NORM_REL_TOL: f64 = 1e-8;

/// `inf {λ > 0 : [Ω/λ] <= 1}` by bisection (`[Ω/λ]` decreases in `λ`).
pub fn lorentz_log_norm(omega: &OmegaSpec, q: f64) -> Result<f64> {
    let bracket = |lam: f64| lorentz_log_bracket(&omega.scaled(Complex64::new(1.0 / lam, 0.0)), q);
    if lorentz_log_bracket(omega, q)? == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (1.0, 1.0);
    while bracket(hi)? > 1.0 {
        hi *= 2.0;
    }
    while bracket(lo)? <= 1.0 {
        lo /= 2.0;
    }
    while hi - lo > 0.01 * NORM_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if bracket(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaNorms {
    pub lq: f64,
    pub lorentz_log_bracket: f64,
    pub lorentz_log_norm: f64,
}

pub fn omega_norms(omega: &OmegaSpec, q: f64) -> Result<OmegaNorms> {
    if !(q > 1.0) || q.is_infinite() {
        return Err(Error::BadExponent(q));
    }
    Ok(OmegaNorms {
        lq: omega.lq_norm(q),
        lorentz_log_bracket: lorentz_log_bracket(omega, q)?,
        lorentz_log_norm: lorentz_log_norm(omega, q)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_is_removed() {
        let o = OmegaSpec::new(2, (0..8).map(|k| Complex64::new(k as f64, 1.0)).collect(), 2.0).unwrap();
        assert!(o.mean().norm() < 1e-12);
        assert!(OmegaSpec::three_bump(2, 64, 2.0).unwrap().mean().norm() < 1e-12);
    }

    #[test]
    fn odd_sample_count_is_rejected() {
        assert!(OmegaSpec::new(2, vec![Complex64::new(1.0, 0.0); 7], 2.0).is_err());
        assert!(OmegaSpec::new(1, vec![Complex64::new(1.0, 0.0); 3], 2.0).is_err());
    }

    #[test]
    fn lookup_is_antipodal() {
        let o = OmegaSpec::three_bump(2, 16, 2.0).unwrap();
        for x in -6i32..=6 {
            for y in -6i32..=6 {
                if x == 0 && y == 0 {
                    continue;
                }
                let z = [x as f64, y as f64];
                let i = o.index(z);
                assert_eq!(o.index([-z[0], -z[1]]), (i + 8) % 16);
            }
        }
    }

    #[test]
    fn adjoint_is_an_involution() {
        let o = OmegaSpec::three_bump(2, 32, 2.0).unwrap();
        assert_eq!(o.adjoint().adjoint(), o);
        let s = OmegaSpec::sign();
        assert_eq!(s.adjoint().samples, vec![Complex64::new(-1.0, 0.0), Complex64::new(1.0, 0.0)]);
    }

    #[test]
    fn zero_omega_has_zero_norms() {
        let o = OmegaSpec::new(2, vec![Complex64::new(0.0, 0.0); 8], 2.0).unwrap();
        let n = omega_norms(&o, 2.0).unwrap();
        assert_eq!((n.lq, n.lorentz_log_bracket, n.lorentz_log_norm), (0.0, 0.0, 0.0));
    }

    #[test]
    fn bracket_rejects_q_at_most_one() {
        assert!(lorentz_log_bracket(&OmegaSpec::sign(), 1.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let text = "angle,re,im\n0,1,0\n3.141592653589793,-1,0\n";
        let o = OmegaSpec::from_csv(1, text, 2.0).unwrap();
        assert_eq!(o.samples, OmegaSpec::sign().samples);
        assert!(OmegaSpec::from_csv(2, "0,1,0\n1.0,2,0\n", 2.0).is_err());
    }
}

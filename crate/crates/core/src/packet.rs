//! Band-limited wave packets built from the frequency-domain solutions
//! `F(z) e^{−t|λ||z|²}` of the CR system, summed over the grid's frequency
//! nodes so they are exactly representable on the periodic vertical axis.

use num_complex::Complex64;

use crate::error::{usage, Result};
use crate::types::{GridSpec, LambdaSignature, MultiIndex, ScalarField};

/// Which side of the vertical spectrum a packet occupies.
///
/// `Positive` packets carry `e^{−itx}` with `t > 0` (slices at `+t`); they are
/// the Hardy functions when no axis is conjugated and `λ > 0`. `Negative`
/// packets carry `e^{+itx}` and are annihilated by the scalar projector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencySide {
    Positive,
    Negative,
}

/// Polynomial bump `(1 − s²)^order`, `s` the affine map of `[t_low, t_high]`
/// onto `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub t_low: f64,
    pub t_high: f64,
    pub order: u32,
}

impl Envelope {
    pub fn new(t_low: f64, t_high: f64) -> Self {
        Self {
            t_low,
            t_high,
            order: 4,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = (2.0 * t - self.t_low - self.t_high) / (self.t_high - self.t_low);
        if s.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - s * s).powi(self.order as i32)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePacketSpec {
    pub alpha: Vec<usize>,
    pub conjugated_axes: MultiIndex,
    pub envelope: Envelope,
    pub side: FrequencySide,
}

impl WavePacketSpec {
    /// Unconjugated positive-side packet.
    pub fn hardy(alpha: Vec<usize>, envelope: Envelope) -> Self {
        Self {
            alpha,
            conjugated_axes: MultiIndex::empty(),
            envelope,
            side: FrequencySide::Positive,
        }
    }
}

/// `u(z, x) = Σ_k Δt g(t_k) ζ^α e^{−t_k Σ|λⱼ||zⱼ|²} e^{∓it_k x}` with
/// `ζⱼ = z̄ⱼ` on conjugated axes and `zⱼ` elsewhere.
pub fn make_wave_packet(
    spec: &WavePacketSpec,
    sig: &LambdaSignature,
    grid: &GridSpec,
) -> Result<ScalarField> {
    let n = sig.n();
    grid.validate()?;
    if spec.alpha.len() != n {
        return usage(format!("packet exponent {:?} has wrong dimension", spec.alpha));
    }
    if spec.conjugated_axes.entries().iter().any(|&j| j > n) {
        return usage("conjugated axis out of range");
    }
    let env = spec.envelope;
    if !(env.t_low > 0.0 && env.t_high > env.t_low) {
        return usage("packet envelope needs 0 < t_low < t_high");
    }
    if sig.is_degenerate() {
        return usage("a zero lambda leaves an axis without Gaussian decay; the packet is not square-integrable");
    }
    let tol = 1e-12;
    if env.t_low < grid.freq_min - tol || env.t_high > grid.freq_max + tol {
        return usage(format!(
            "packet envelope [{}, {}] leaves the band [{}, {}]",
            env.t_low, env.t_high, grid.freq_min, grid.freq_max
        ));
    }
    let dt = grid.freq_step();
    let terms: Vec<(f64, f64)> = grid
        .frequencies()
        .into_iter()
        .map(|t| (t, env.eval(t)))
        .filter(|&(_, g)| g > 0.0)
        .collect();
    if terms.is_empty() {
        return usage("packet envelope contains no grid frequency");
    }
    let sign = match spec.side {
        FrequencySide::Positive => -1.0,
        FrequencySide::Negative => 1.0,
    };
    let abs: Vec<f64> = sig.lambdas().iter().map(|l| l.abs()).collect();
    ScalarField::from_fn(n, grid.clone(), |z, x| {
        let mut mono = Complex64::new(1.0, 0.0);
        let mut q = 0.0;
        for (j, zj) in z.iter().enumerate() {
            let zeta = if spec.conjugated_axes.contains(j + 1) {
                zj.conj()
            } else {
                *zj
            };
            mono *= zeta.powi(spec.alpha[j] as i32);
            q += abs[j] * zj.norm_sqr();
        }
        let sum: Complex64 = terms
            .iter()
            .map(|&(t, g)| dt * g * (-t * q).exp() * Complex64::from_polar(1.0, sign * t * x))
            .sum();
        mono * sum
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::partial_ft;
    use crate::types::QuadratureRule;

    fn grid() -> GridSpec {
        GridSpec {
            spatial_radius: 3.0,
            spatial_points: 13,
            vertical_radius: 8.0,
            vertical_points: 32,
            freq_min: 0.5,
            freq_max: 3.0,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        }
    }

    #[test]
    fn envelope_shape() {
        let e = Envelope::new(1.0, 2.0);
        assert_eq!(e.eval(1.5), 1.0);
        assert_eq!(e.eval(1.0), 0.0);
        assert_eq!(e.eval(2.5), 0.0);
        assert!((e.eval(1.25) - 0.75f64.powi(4)).abs() < 1e-15);
    }

    #[test]
    fn packet_occupies_its_side() {
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let g = grid();
        for (side, positive) in [(FrequencySide::Positive, true), (FrequencySide::Negative, false)] {
            let spec = WavePacketSpec {
                side,
                ..WavePacketSpec::hardy(vec![1], Envelope::new(1.0, 2.0))
            };
            let u = make_wave_packet(&spec, &sig, &g).unwrap();
            let f = partial_ft(&u).unwrap();
            for s in f.slices() {
                let mass: f64 = s.values.iter().map(|v| v.norm()).sum();
                let expected = s.t.abs() > 1.0 && s.t.abs() < 2.0 && (s.t > 0.0) == positive;
                assert_eq!(mass > 1e-9, expected, "t = {}", s.t);
            }
        }
    }

    #[test]
    fn rejects_bad_envelopes() {
        let sig = LambdaSignature::new(vec![1.0]).unwrap();
        let g = grid();
        let bad = WavePacketSpec::hardy(vec![0], Envelope::new(2.0, 4.0));
        assert!(make_wave_packet(&bad, &sig, &g).is_err());
        let bad = WavePacketSpec::hardy(vec![0], Envelope::new(-1.0, 2.0));
        assert!(make_wave_packet(&bad, &sig, &g).is_err());
        let deg = LambdaSignature::new(vec![0.0]).unwrap();
        let ok = WavePacketSpec::hardy(vec![0], Envelope::new(1.0, 2.0));
        assert!(make_wave_packet(&ok, &deg, &g).is_err());
    }
}

//! Run configuration: TOML with dotted sections (`grid.spatial_points`,
//! `tolerances.parseval`, ...). Every key has a default; see the README for
//! the full table.

use serde::Deserialize;

use crate::error::{parse_err, usage, Result};
use crate::packet::{Envelope, FrequencySide, WavePacketSpec};
use crate::types::{GridSpec, LambdaSignature, MultiIndex, QuadratureRule};

/// Gating budgets of the verification suite, keyed by the names printed in
/// its report.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub gamma_moment: f64,
    pub fio_agreement: f64,
    pub phase_identity: f64,
    pub gaussian_reproducing: f64,
    pub slice_reproduction: f64,
    pub slice_annihilation: f64,
    pub slice_contraction: f64,
    pub slice_idempotency: f64,
    pub parseval: f64,
    pub hardy_reproduction: f64,
    pub negative_frequency: f64,
    pub projector_idempotency: f64,
    pub projector_self_adjoint: f64,
    pub pairing_agreement: f64,
    pub direct_kernel: f64,
    pub form_reproduction: f64,
    pub cross_component: f64,
    pub witness_ratio: f64,
    pub finite_integral: f64,
    pub cr_order: f64,
    pub cr_residual: f64,
    pub noise_factor: f64,
    pub kernel_route_agreement: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gamma_moment: 1e-9,
            fio_agreement: 1e-6,
            phase_identity: 1e-12,
            gaussian_reproducing: 1e-6,
            slice_reproduction: 1e-4,
            slice_annihilation: 1e-4,
            slice_contraction: 1e-6,
            slice_idempotency: 2e-4,
            parseval: 1e-8,
            hardy_reproduction: 1e-3,
            negative_frequency: 1e-3,
            projector_idempotency: 2e-3,
            projector_self_adjoint: 1e-3,
            pairing_agreement: 1e-4,
            direct_kernel: 5e-3,
            form_reproduction: 1e-3,
            cross_component: 1e-12,
            witness_ratio: 1e3,
            finite_integral: 1e-6,
            cr_order: 3.5,
            cr_residual: 1e-3,
            noise_factor: 1e3,
            kernel_route_agreement: 1e-6,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 23] {
        [
            ("gamma_moment", self.gamma_moment),
            ("fio_agreement", self.fio_agreement),
            ("phase_identity", self.phase_identity),
            ("gaussian_reproducing", self.gaussian_reproducing),
            ("slice_reproduction", self.slice_reproduction),
            ("slice_annihilation", self.slice_annihilation),
            ("slice_contraction", self.slice_contraction),
            ("slice_idempotency", self.slice_idempotency),
            ("parseval", self.parseval),
            ("hardy_reproduction", self.hardy_reproduction),
            ("negative_frequency", self.negative_frequency),
            ("projector_idempotency", self.projector_idempotency),
            ("projector_self_adjoint", self.projector_self_adjoint),
            ("pairing_agreement", self.pairing_agreement),
            ("direct_kernel", self.direct_kernel),
            ("form_reproduction", self.form_reproduction),
            ("cross_component", self.cross_component),
            ("witness_ratio", self.witness_ratio),
            ("finite_integral", self.finite_integral),
            ("cr_order", self.cr_order),
            ("cr_residual", self.cr_residual),
            ("noise_factor", self.noise_factor),
            ("kernel_route_agreement", self.kernel_route_agreement),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.entries() {
            if !(v > 0.0 && v.is_finite()) {
                return usage(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyProfile {
    #[default]
    Full,
    /// Reduced sample counts; used by the determinism self-check.
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SideKey {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PacketToml {
    alpha: Vec<usize>,
    #[serde(default)]
    conjugated_axes: Vec<usize>,
    t_low: f64,
    t_high: f64,
    #[serde(default = "default_order")]
    order: u32,
    #[serde(default = "default_side")]
    side: SideKey,
    #[serde(default)]
    component: Vec<usize>,
}

fn default_order() -> u32 {
    4
}

fn default_side() -> SideKey {
    SideKey::Positive
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SigToml {
    lambdas: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct VerifyToml {
    profile: VerifyProfile,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigToml {
    epsilon: Option<f64>,
    seed: Option<u64>,
    jobs: Option<usize>,
    sig: Option<SigToml>,
    grid: Option<GridSpec>,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    packet: Vec<PacketToml>,
    #[serde(default)]
    verify: VerifyToml,
}

/// A wave packet placed in one component of a form.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketEntry {
    pub spec: WavePacketSpec,
    pub component: MultiIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub sig: LambdaSignature,
    pub grid: GridSpec,
    pub epsilon: f64,
    pub packets: Vec<PacketEntry>,
    pub seed: u64,
    /// Worker threads; 0 means one per available core.
    pub jobs: usize,
    pub tolerances: Tolerances,
    pub profile: VerifyProfile,
}

pub const DEFAULT_SEED: u64 = 20_170_528;

/// Desk-scale grid for `n` complex dimensions; every budget holds for unit
/// `|λ|`.
pub fn default_grid(n: usize) -> GridSpec {
    match n {
        1 => GridSpec {
            spatial_radius: 4.0,
            spatial_points: 49,
            vertical_radius: 16.0,
            vertical_points: 128,
            freq_min: 0.75,
            freq_max: 7.5,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        },
        _ => GridSpec {
            spatial_radius: 3.5,
            spatial_points: 19,
            vertical_radius: 16.0,
            vertical_points: 16,
            freq_min: 0.9,
            freq_max: 1.45,
            quadrature_rule: QuadratureRule::UniformTrapezoid,
        },
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            sig: LambdaSignature::new(vec![1.0]).expect("valid signature"),
            grid: default_grid(1),
            epsilon: 0.25,
            packets: Vec::new(),
            seed: DEFAULT_SEED,
            jobs: 0,
            tolerances: Tolerances::default(),
            profile: VerifyProfile::Full,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: ConfigToml = match toml::from_str(text) {
            Ok(raw) => raw,
            Err(e) => return parse_err(format!("config: {}", e.message())),
        };
        let sig = match raw.sig {
            Some(s) => LambdaSignature::new(s.lambdas)?,
            None => RunConfig::default().sig,
        };
        let n = sig.n();
        let grid = raw.grid.unwrap_or_else(|| default_grid(n));
        grid.validate()?;
        let epsilon = raw.epsilon.unwrap_or(0.25);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return usage("epsilon must be positive");
        }
        raw.tolerances.validate()?;
        let mut packets = Vec::with_capacity(raw.packet.len());
        for p in raw.packet {
            if p.alpha.len() != n {
                return usage(format!("packet alpha {:?} does not have {n} entries", p.alpha));
            }
            packets.push(PacketEntry {
                spec: WavePacketSpec {
                    alpha: p.alpha,
                    conjugated_axes: MultiIndex::new(p.conjugated_axes, n)?,
                    envelope: Envelope {
                        t_low: p.t_low,
                        t_high: p.t_high,
                        order: p.order,
                    },
                    side: match p.side {
                        SideKey::Positive => FrequencySide::Positive,
                        SideKey::Negative => FrequencySide::Negative,
                    },
                },
                component: MultiIndex::new(p.component, n)?,
            });
        }
        if let Some(first) = packets.first() {
            let q = first.component.len();
            if packets.iter().any(|p| p.component.len() != q) {
                return usage("all packets must target components of the same degree");
            }
        }
        Ok(Self {
            sig,
            grid,
            epsilon,
            packets,
            seed: raw.seed.unwrap_or(DEFAULT_SEED),
            jobs: raw.jobs.unwrap_or(0),
            tolerances: raw.tolerances,
            profile: raw.verify.profile,
        })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn default_grids_meet_budgets() {
        for n in [1, 2] {
            let sig = LambdaSignature::new(vec![1.0; n]).unwrap();
            crate::transform::check_budgets(&default_grid(n), &sig).unwrap();
        }
    }

    #[test]
    fn dotted_keys_and_packets() {
        let cfg = RunConfig::from_toml_str(
            r#"
            epsilon = 0.5
            seed = 7
            sig.lambdas = [-1.0, 1.0]
            grid.spatial_radius = 3.0
            grid.spatial_points = 9
            grid.vertical_radius = 4.0
            grid.vertical_points = 8
            grid.freq_min = 0.5
            grid.freq_max = 2.0
            tolerances.parseval = 1e-7

            [[packet]]
            alpha = [0, 1]
            conjugated_axes = [1]
            t_low = 0.6
            t_high = 1.9
            component = [1]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.sig.n_minus(), 1);
        assert_eq!(cfg.grid.spatial_points, 9);
        assert_eq!(cfg.tolerances.parseval, 1e-7);
        assert_eq!(cfg.tolerances.gamma_moment, 1e-9);
        assert_eq!(cfg.packets[0].component.entries(), &[1]);
        assert_eq!(cfg.packets[0].spec.side, FrequencySide::Positive);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(
            RunConfig::from_toml_str("tolerances.parseval = 0.0"),
            Err(crate::SzegoError::Usage(_))
        ));
        assert!(matches!(
            RunConfig::from_toml_str("nonsense = 1"),
            Err(crate::SzegoError::Parse(_))
        ));
        assert!(RunConfig::from_toml_str("epsilon = -1.0").is_err());
        assert!(RunConfig::from_toml_str("sig.lambdas = []").is_err());
    }
}

//! Recursive symmetric correction.
//!
//! The active space is halved level by level. At each level a position is
//! encoded as bit 1 when it lies at or above the current midpoint and bit 0
//! otherwise. A prediction whose bit disagrees with the ground-truth bit is
//! reflected about the midpoint (`2 * mid - zhat`), which moves it into the
//! truth's half without leaving the current subspace. The truth's bit then
//! selects the subspace for the next level, so after `N` levels every
//! prediction shares a cell of width `L / 2^N` with its ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActiveSpace, BitSeries, PredictionSeries, TrajectorySeries};

/// Relative tolerance by which subspace bounds are widened when checking
/// containment.
pub const BOUNDS_TOLERANCE: f64 = 1e-9;

/// Fraction of the subspace width used to push a midpoint tie into the lower
/// half.
pub const TIE_NUDGE: f64 = 1e-9;

/// Deepest supported level; beyond this the halving underflows `f64`
/// resolution for typical spaces.
pub const MAX_LEVELS: usize = 52;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceNode {
    pub level: usize,
    pub bounds: ActiveSpace,
    pub bit_path: Vec<u8>,
}

/// Follows `bit_path` from `root`: bit 1 keeps the upper half, bit 0 the lower.
pub fn subspace_for(bit_path: &[u8], root: &ActiveSpace) -> SubspaceNode {
    let bounds = bit_path.iter().fold(*root, |b, bit| {
        if *bit == 1 {
            b.upper_half()
        } else {
            b.lower_half()
        }
    });
    SubspaceNode {
        level: bit_path.len(),
        bounds,
        bit_path: bit_path.to_vec(),
    }
}

#[inline]
fn bit_of(z: f64, mid: f64) -> u8 {
    u8::from(z >= mid)
}

fn extended_contains(z: f64, b: &ActiveSpace) -> bool {
    let tol = BOUNDS_TOLERANCE * b.width();
    z >= b.z_min() - tol && z <= b.z_max() + tol
}

/// Bit of `z` relative to the midpoint of `sub`.
pub fn encode_bit(z: f64, sub: &SubspaceNode) -> Result<u8> {
    if !extended_contains(z, &sub.bounds) {
        return Err(Error::OutOfSubspace {
            z,
            lo: sub.bounds.z_min(),
            hi: sub.bounds.z_max(),
        });
    }
    Ok(bit_of(z, sub.bounds.mid()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Step {
    position: f64,
    predicted_bit: u8,
    reflected: bool,
    nudged: bool,
}

fn step(zhat: f64, truth_bit: u8, b: &ActiveSpace) -> Step {
    let mid = b.mid();
    let predicted_bit = bit_of(zhat, mid);
    if predicted_bit == truth_bit {
        return Step {
            position: zhat,
            predicted_bit,
            reflected: false,
            nudged: false,
        };
    }
    let reflected = zhat + 2.0 * (mid - zhat);
    if bit_of(reflected, mid) == truth_bit {
        return Step {
            position: reflected,
            predicted_bit,
            reflected: true,
            nudged: false,
        };
    }
    // Only reachable when zhat sits on (or rounds onto) the midpoint.
    let position = if truth_bit == 1 {
        mid
    } else {
        mid - TIE_NUDGE * b.width()
    };
    Step {
        position,
        predicted_bit,
        reflected: true,
        nudged: true,
    }
}

/// One correction step: keep `zhat` when its bit matches `truth_bit`,
/// otherwise reflect it about the subspace midpoint.
pub fn correct_once(zhat: f64, truth_bit: u8, sub: &SubspaceNode) -> Result<f64> {
    if truth_bit > 1 {
        return Err(Error::InvalidConfig(format!("bit value {truth_bit} is not 0 or 1")));
    }
    encode_bit(zhat, sub)?;
    Ok(step(zhat, truth_bit, &sub.bounds).position)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionMode {
    /// Reflect the level-0 predictions only.
    #[default]
    Static,
    /// Re-decode every subspace before correcting at levels `n >= 1`.
    Refit,
}

/// Re-decodes the samples of one subspace. Implemented by the EM decoder.
pub trait Redecode {
    /// Returns one position per entry of `indices`, in the same order.
    fn redecode(&self, indices: &[usize], bounds: &ActiveSpace) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionConfig {
    pub levels: usize,
    pub mode: CorrectionMode,
    /// Subspaces with fewer samples are corrected statically in refit mode.
    pub min_group_size: usize,
}

impl CorrectionConfig {
    pub fn static_levels(levels: usize) -> Self {
        Self {
            levels,
            mode: CorrectionMode::Static,
            min_group_size: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    /// Prediction fell outside its current subspace and was clamped.
    Clamp,
    /// Prediction sat on the midpoint and was nudged into the lower half.
    TieNudge,
    /// Subspace too small to re-decode; corrected statically.
    RefitFallback,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionEvent {
    pub level: usize,
    pub kind: EventKind,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub root: ActiveSpace,
    pub mode: CorrectionMode,
    /// Predictions for levels `0..=N`.
    pub predictions: Vec<PredictionSeries>,
    /// Bits of the prediction entering level `n`, for `n` in `0..N`.
    pub predicted_bits: Vec<BitSeries>,
    /// Ground-truth bits at level `n`, for `n` in `0..N`.
    pub truth_bits: Vec<BitSeries>,
    pub events: Vec<CorrectionEvent>,
}

impl CorrectionTrace {
    /// Number of correction levels `N`.
    pub fn depth(&self) -> usize {
        self.predictions.len() - 1
    }

    pub fn level(&self, n: usize) -> &PredictionSeries {
        &self.predictions[n]
    }

    /// Number of samples whose prediction was reflected at level `n`.
    pub fn reflections(&self, n: usize) -> usize {
        self.predicted_bits[n]
            .bits()
            .iter()
            .zip(self.truth_bits[n].bits())
            .filter(|(p, t)| p != t)
            .count()
    }
}

/// Corrects `level0` against `truth` for `cfg.levels` levels.
///
/// Each sample walks its own chain of subspaces, chosen by the ground-truth
/// bits. In refit mode `hook` re-decodes each subspace's samples before the
/// correction at every level `n >= 1`.
pub fn correct_recursive(
    level0: &PredictionSeries,
    truth: &TrajectorySeries,
    root: &ActiveSpace,
    cfg: &CorrectionConfig,
    hook: Option<&dyn Redecode>,
) -> Result<CorrectionTrace> {
    let k_len = truth.len();
    if level0.len() != k_len {
        return Err(Error::DimensionMismatch {
            what: "level-0 predictions",
            expected: k_len,
            found: level0.len(),
        });
    }
    if cfg.levels > MAX_LEVELS {
        return Err(Error::InvalidConfig(format!(
            "correction depth {} exceeds {MAX_LEVELS}",
            cfg.levels
        )));
    }
    if cfg.mode == CorrectionMode::Refit && cfg.levels > 1 && hook.is_none() {
        return Err(Error::InvalidConfig(
            "refit mode requires a re-decoding hook".into(),
        ));
    }
    if let Some(&z) = truth.positions().iter().find(|z| !root.contains(**z)) {
        return Err(Error::OutOfSubspace {
            z,
            lo: root.z_min(),
            hi: root.z_max(),
        });
    }

    let mut bounds = vec![*root; k_len];
    let mut current = level0.positions.clone();
    let mut predictions = vec![PredictionSeries {
        level: 0,
        ..level0.clone()
    }];
    let mut predicted_bits = Vec::with_capacity(cfg.levels);
    let mut truth_bits = Vec::with_capacity(cfg.levels);
    let mut events = Vec::new();

    for n in 0..cfg.levels {
        if cfg.mode == CorrectionMode::Refit && n >= 1 {
            let fallback = refit_level(
                &mut current,
                &bounds,
                cfg.min_group_size,
                hook.expect("checked above"),
            )?;
            push_event(&mut events, n, EventKind::RefitFallback, fallback);
        }

        let mut clamps = 0;
        let mut ties = 0;
        let mut pbits = Vec::with_capacity(k_len);
        let mut tbits = Vec::with_capacity(k_len);
        for (k, &z) in truth.positions().iter().enumerate() {
            let b = bounds[k];
            let zhat = if b.contains(current[k]) {
                current[k]
            } else {
                clamps += 1;
                b.clamp(current[k])
            };
            let tb = bit_of(z, b.mid());
            let st = step(zhat, tb, &b);
            ties += usize::from(st.nudged);
            current[k] = st.position;
            pbits.push(st.predicted_bit);
            tbits.push(tb);
            bounds[k] = if tb == 1 { b.upper_half() } else { b.lower_half() };
        }
        push_event(&mut events, n, EventKind::Clamp, clamps);
        push_event(&mut events, n, EventKind::TieNudge, ties);

        predicted_bits.push(BitSeries::new(n, pbits)?);
        truth_bits.push(BitSeries::new(n, tbits)?);
        predictions.push(PredictionSeries {
            level: n + 1,
            positions: current.clone(),
            covariances: level0.covariances.clone(),
        });
    }

    Ok(CorrectionTrace {
        root: *root,
        mode: cfg.mode,
        predictions,
        predicted_bits,
        truth_bits,
        events,
    })
}

fn push_event(events: &mut Vec<CorrectionEvent>, level: usize, kind: EventKind, count: usize) {
    if count > 0 {
        events.push(CorrectionEvent { level, kind, count });
    }
}

/// Groups samples by their current subspace and replaces their predictions
/// with a fresh decode. Returns how many samples fell back to static.
fn refit_level(
    current: &mut [f64],
    bounds: &[ActiveSpace],
    min_group: usize,
    hook: &dyn Redecode,
) -> Result<usize> {
    let mut groups: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (k, b) in bounds.iter().enumerate() {
        groups
            .entry((b.z_min().to_bits(), b.z_max().to_bits()))
            .or_default()
            .push(k);
    }
    let mut fallback = 0;
    for idx in groups.values() {
        if idx.len() < min_group.max(2) {
            fallback += idx.len();
            continue;
        }
        let b = bounds[idx[0]];
        let decoded = hook.redecode(idx, &b)?;
        if decoded.len() != idx.len() {
            return Err(Error::DimensionMismatch {
                what: "re-decoded subspace",
                expected: idx.len(),
                found: decoded.len(),
            });
        }
        for (&k, z) in idx.iter().zip(decoded) {
            current[k] = z;
        }
    }
    Ok(fallback)
}

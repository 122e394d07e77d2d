//! Entropy / mean-alpha decomposition of a Pauli coherence matrix and the
//! nine-zone classification of the H/alpha plane.

use crate::error::{Error, Result};
use crate::linalg::{eigen_decompose, HermitianMatrix};

/// A point in the H/alpha plane: entropy in [0, 1], mean scattering angle in
/// degrees in [0, 90].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HAlphaPoint {
    pub entropy: f64,
    pub mean_alpha_deg: f64,
}

/// Zones of the H/alpha plane. Z9..Z7 live at low entropy, Z6..Z4 at medium
/// entropy, Z3..Z1 at high entropy; within each band the zone index falls as
/// alpha rises (surface -> dipole/vegetation -> multiple/double bounce).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Zone {
    Z1,
    Z2,
    Z3,
    Z4,
    Z5,
    Z6,
    Z7,
    Z8,
    Z9,
}

impl Zone {
    pub const ALL: [Zone; 9] = [
        Zone::Z1,
        Zone::Z2,
        Zone::Z3,
        Zone::Z4,
        Zone::Z5,
        Zone::Z6,
        Zone::Z7,
        Zone::Z8,
        Zone::Z9,
    ];

    /// 1-based zone number.
    pub fn number(self) -> usize {
        match self {
            Zone::Z1 => 1,
            Zone::Z2 => 2,
            Zone::Z3 => 3,
            Zone::Z4 => 4,
            Zone::Z5 => 5,
            Zone::Z6 => 6,
            Zone::Z7 => 7,
            Zone::Z8 => 8,
            Zone::Z9 => 9,
        }
    }

    pub fn from_number(n: usize) -> Option<Zone> {
        Zone::ALL.get(n.checked_sub(1)?).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Zone::Z1 => "high-entropy double bounce",
            Zone::Z2 => "high-entropy multiple scattering",
            Zone::Z3 => "high-entropy surface (nonfeasible)",
            Zone::Z4 => "medium-entropy multiple scattering",
            Zone::Z5 => "medium-entropy vegetation",
            Zone::Z6 => "medium-entropy surface",
            Zone::Z7 => "low-entropy multiple scattering",
            Zone::Z8 => "low-entropy dipole",
            Zone::Z9 => "low-entropy surface",
        }
    }
}

/// Relative gap under which eigenvalues are treated as degenerate and their
/// eigenvectors averaged, keeping the output stable under tiny spectral
/// perturbations.
const DEGENERACY_REL_TOL: f64 = 1e-8;

/// Entropy and mean scattering angle of a PSD coherence matrix.
///
/// Eigenvalues are clipped at zero and normalized to probabilities p_i;
/// H = -sum p_i log3 p_i, alpha_i = arccos |e_i(1)|, and the mean alpha
/// weights the alphas by p_i. Within a numerically degenerate eigenvalue
/// group the first-component mass is shared evenly so the result does not
/// depend on the arbitrary basis of the eigenspace.
pub fn h_alpha(t_p: &HermitianMatrix) -> Result<HAlphaPoint> {
    if t_p.dim() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "h_alpha expects 3x3, got {}x{}",
            t_p.dim(),
            t_p.dim()
        )));
    }
    let (vals, vecs) = eigen_decompose(t_p);
    let clipped: Vec<f64> = vals.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "coherence matrix has zero trace".into(),
        ));
    }
    let p: Vec<f64> = clipped.iter().map(|v| v / total).collect();

    let mut entropy = 0.0;
    for &pi in &p {
        if pi > 0.0 {
            entropy -= pi * pi.ln();
        }
    }
    entropy /= 3.0f64.ln();
    entropy = entropy.clamp(0.0, 1.0);

    // group indices of (numerically) equal eigenvalues
    let max_val = clipped.iter().cloned().fold(0.0f64, f64::max);
    let tol = DEGENERACY_REL_TOL * max_val;
    let mut mean_alpha = 0.0;
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (clipped[end] - clipped[end - 1]).abs() <= tol {
            end += 1;
        }
        let group = end - start;
        let mass: f64 = (start..end).map(|i| vecs.get(0, i).norm_sqr()).sum();
        let alpha = ((mass / group as f64).sqrt().clamp(0.0, 1.0)).acos();
        for i in start..end {
            mean_alpha += p[i] * alpha;
        }
        start = end;
    }

    Ok(HAlphaPoint {
        entropy,
        mean_alpha_deg: (mean_alpha.to_degrees()).clamp(0.0, 90.0),
    })
}

/// Zone of a point in the H/alpha plane.
///
/// Entropy bands split at 0.5 and 0.9; the alpha splits are 42.5/47.5
/// degrees at low entropy, 40/50 at medium entropy and 40/55 at high
/// entropy. Band boundaries are half-open and lower-inclusive.
pub fn zone_index(p: &HAlphaPoint) -> Zone {
    let h = p.entropy;
    let a = p.mean_alpha_deg;
    if h < 0.5 {
        if a < 42.5 {
            Zone::Z9
        } else if a < 47.5 {
            Zone::Z8
        } else {
            Zone::Z7
        }
    } else if h < 0.9 {
        if a < 40.0 {
            Zone::Z6
        } else if a < 50.0 {
            Zone::Z5
        } else {
            Zone::Z4
        }
    } else if a < 40.0 {
        Zone::Z3
    } else if a < 55.0 {
        Zone::Z2
    } else {
        Zone::Z1
    }
}

//! Structured maximum-likelihood estimates of the 3x3 polarimetric
//! covariance under the four scattering-symmetry hypotheses.
//!
//! Each hypothesis defines a constraint set of Hermitian matrices; `project`
//! maps an unconstrained statistic matrix to the constrained ML estimate.
//! Reflection symmetry decorrelates co- and cross-polarized channels,
//! rotation symmetry ties the diagonal corners and makes the HH-HV
//! correlation purely imaginary, and azimuth symmetry is the intersection of
//! both.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};

/// The four polarimetric symmetry hypotheses, ordered from least to most
/// constrained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SymmetryHypothesis {
    NoSymmetry,
    Reflection,
    Rotation,
    Azimuth,
}

impl SymmetryHypothesis {
    pub const ALL: [SymmetryHypothesis; 4] = [
        SymmetryHypothesis::NoSymmetry,
        SymmetryHypothesis::Reflection,
        SymmetryHypothesis::Rotation,
        SymmetryHypothesis::Azimuth,
    ];

    /// Number of free real parameters of the constrained 3x3 covariance.
    pub fn zeta_p(self) -> usize {
        match self {
            SymmetryHypothesis::NoSymmetry => 9,
            SymmetryHypothesis::Reflection => 5,
            SymmetryHypothesis::Rotation => 3,
            SymmetryHypothesis::Azimuth => 2,
        }
    }

    pub fn index(self) -> usize {
        match self {
            SymmetryHypothesis::NoSymmetry => 0,
            SymmetryHypothesis::Reflection => 1,
            SymmetryHypothesis::Rotation => 2,
            SymmetryHypothesis::Azimuth => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<SymmetryHypothesis> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            SymmetryHypothesis::NoSymmetry => "none",
            SymmetryHypothesis::Reflection => "reflection",
            SymmetryHypothesis::Rotation => "rotation",
            SymmetryHypothesis::Azimuth => "azimuth",
        }
    }

    pub fn from_label(s: &str) -> Option<SymmetryHypothesis> {
        Self::ALL.iter().copied().find(|h| h.label() == s)
    }
}

impl std::fmt::Display for SymmetryHypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Fixed 3x3 basis matrices used by the rotation and azimuth estimates.
struct Bases {
    /// Forward map for rotation: V E T.
    rot_fwd: ComplexMatrix,
    /// Inverse map for rotation: T^H E^{-1} V^H.
    rot_inv: ComplexMatrix,
    /// Forward map for azimuth: E T.
    azi_fwd: ComplexMatrix,
    /// Inverse map for azimuth: T^H E^{-1}.
    azi_inv: ComplexMatrix,
}

fn bases() -> &'static Bases {
    static BASES: OnceLock<Bases> = OnceLock::new();
    BASES.get_or_init(|| {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let t = crate::linalg::pauli_basis();
        let e = ComplexMatrix::from_rows(&[
            vec![one, z, z],
            vec![z, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), z],
            vec![z, z, one],
        ]);
        let e_inv = ComplexMatrix::from_rows(&[
            vec![one, z, z],
            vec![z, Complex64::new(std::f64::consts::SQRT_2, 0.0), z],
            vec![z, z, one],
        ]);
        let v = ComplexMatrix::from_rows(&[
            vec![one, z, z],
            vec![z, z, Complex64::new(0.0, 1.0)],
            vec![z, one, z],
        ]);
        Bases {
            rot_fwd: v.mul(&e).mul(&t),
            rot_inv: t.adjoint().mul(&e_inv).mul(&v.adjoint()),
            azi_fwd: e.mul(&t),
            azi_inv: t.adjoint().mul(&e_inv),
        }
    })
}

/// Constrained ML estimate of the 3x3 polarimetric covariance for hypothesis
/// `h`, given the statistic matrix `s`. The output lies exactly in the
/// structure set of `h` (structural zeros and equalities are enforced after
/// the basis round-trip to remove roundoff residue).
pub fn project(s: &HermitianMatrix, h: SymmetryHypothesis) -> Result<HermitianMatrix> {
    if s.dim() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "projection expects 3x3, got {}x{}",
            s.dim(),
            s.dim()
        )));
    }
    s.check_psd(1e-12)?;
    Ok(project_unchecked(s, h))
}

/// As `project` but without the PSD guard; used by the estimation loop where
/// the statistic is PSD by construction.
pub(crate) fn project_unchecked(s: &HermitianMatrix, h: SymmetryHypothesis) -> HermitianMatrix {
    match h {
        SymmetryHypothesis::NoSymmetry => s.clone(),
        SymmetryHypothesis::Reflection => {
            // co/cross-pol decorrelation: zero (0,1) and (1,2)
            let mut out = s.clone();
            let z = Complex64::new(0.0, 0.0);
            out.set_pair(0, 1, z);
            out.set_pair(1, 2, z);
            out
        }
        SymmetryHypothesis::Rotation => {
            let b = bases();
            let st = congruence(&b.rot_fwd, s);
            // block-diagonal truncation with persymmetrization of the
            // lower-right 2x2 block (J the 2x2 exchange matrix)
            let mut d = ComplexMatrix::zeros(3, 3);
            d.set(0, 0, Complex64::new(st.get(0, 0).re, 0.0));
            let s11 = st.get(1, 1);
            let s12 = st.get(1, 2);
            let s21 = st.get(2, 1);
            let s22 = st.get(2, 2);
            // (B + J B J)/2 for B = [[s11, s12], [s21, s22]]
            d.set(1, 1, (s11 + s22) * 0.5);
            d.set(1, 2, (s12 + s21) * 0.5);
            d.set(2, 1, (s21 + s12) * 0.5);
            d.set(2, 2, (s22 + s11) * 0.5);
            let raw = congruence_complex(&b.rot_inv, &d);
            // exact structure: [[a, ib, c], [-ib, (a-c)/2, ib], [c, -ib, a]]
            let a = 0.5 * (raw.get(0, 0).re + raw.get(2, 2).re);
            let c = 0.5 * (raw.get(0, 2).re + raw.get(2, 0).re);
            let bim = 0.5 * (raw.get(0, 1).im + raw.get(1, 2).im);
            build_rotation(a, c, bim)
        }
        SymmetryHypothesis::Azimuth => {
            let b = bases();
            let st = congruence(&b.azi_fwd, s);
            let avg = 0.5 * (st.get(1, 1).re + st.get(2, 2).re);
            let mut d = ComplexMatrix::zeros(3, 3);
            d.set(0, 0, Complex64::new(st.get(0, 0).re, 0.0));
            d.set(1, 1, Complex64::new(avg, 0.0));
            d.set(2, 2, Complex64::new(avg, 0.0));
            let raw = congruence_complex(&b.azi_inv, &d);
            // exact structure: [[a, 0, c], [0, (a-c)/2, 0], [c, 0, a]]
            let a = 0.5 * (raw.get(0, 0).re + raw.get(2, 2).re);
            let c = 0.5 * (raw.get(0, 2).re + raw.get(2, 0).re);
            build_azimuth(a, c)
        }
    }
}

fn build_rotation(a: f64, c: f64, bim: f64) -> HermitianMatrix {
    let mut out = HermitianMatrix::zeros(3);
    out.set_pair(0, 0, Complex64::new(a, 0.0));
    out.set_pair(2, 2, Complex64::new(a, 0.0));
    out.set_pair(1, 1, Complex64::new((a - c) / 2.0, 0.0));
    out.set_pair(0, 2, Complex64::new(c, 0.0));
    out.set_pair(0, 1, Complex64::new(0.0, bim));
    out.set_pair(1, 2, Complex64::new(0.0, bim));
    out
}

fn build_azimuth(a: f64, c: f64) -> HermitianMatrix {
    let mut out = HermitianMatrix::zeros(3);
    out.set_pair(0, 0, Complex64::new(a, 0.0));
    out.set_pair(2, 2, Complex64::new(a, 0.0));
    out.set_pair(1, 1, Complex64::new((a - c) / 2.0, 0.0));
    out.set_pair(0, 2, Complex64::new(c, 0.0));
    out
}

/// W S W^H for Hermitian S.
fn congruence(w: &ComplexMatrix, s: &HermitianMatrix) -> ComplexMatrix {
    w.mul(&s.to_complex()).mul(&w.adjoint())
}

/// W D W^H for a general complex D.
fn congruence_complex(w: &ComplexMatrix, d: &ComplexMatrix) -> ComplexMatrix {
    w.mul(d).mul(&w.adjoint())
}

/// Maximum absolute violation of the entry constraints defining hypothesis
/// `h`; zero iff the matrix lies in the structure set.
pub fn structure_residual(c: &HermitianMatrix, h: SymmetryHypothesis) -> f64 {
    assert_eq!(c.dim(), 3, "structure_residual expects 3x3");
    match h {
        SymmetryHypothesis::NoSymmetry => 0.0,
        SymmetryHypothesis::Reflection => c.get(0, 1).norm().max(c.get(1, 2).norm()),
        SymmetryHypothesis::Rotation => {
            let v = [
                c.get(0, 1).re.abs(),
                c.get(1, 2).re.abs(),
                (c.get(0, 1) - c.get(1, 2)).norm(),
                c.get(0, 2).im.abs(),
                (c.get(0, 0).re - c.get(2, 2).re).abs(),
                (c.get(1, 1).re - (c.get(0, 0).re - c.get(0, 2).re) / 2.0).abs(),
            ];
            v.into_iter().fold(0.0, f64::max)
        }
        SymmetryHypothesis::Azimuth => {
            let v = [
                c.get(0, 1).norm(),
                c.get(1, 2).norm(),
                c.get(0, 2).im.abs(),
                (c.get(0, 0).re - c.get(2, 2).re).abs(),
                (c.get(1, 1).re - (c.get(0, 0).re - c.get(0, 2).re) / 2.0).abs(),
            ];
            v.into_iter().fold(0.0, f64::max)
        }
    }
}

//! Reference benchmark values for the standard simulation scenarios. The
//! `simulate` summary prints deltas against these; comparisons are
//! informational and never fail a run (the acceptance suite owns the hard
//! checks).

/// BIC accuracies (%) per class for the exponentially correlated scenario
/// with rho = 0.9, keyed by (passes, looks):
/// [none, reflection, rotation, azimuth].
pub const BIC_RHO09_ACCURACY: &[(usize, usize, [f64; 4])] = &[
    (1, 6, [99.9, 73.4, 75.2, 58.4]),
    (2, 6, [100.0, 68.4, 85.2, 70.8]),
    (3, 6, [100.0, 70.0, 87.6, 71.7]),
    (4, 6, [100.0, 72.1, 88.0, 72.6]),
    (1, 9, [100.0, 88.2, 91.1, 74.7]),
    (2, 9, [100.0, 80.2, 94.1, 81.0]),
    (3, 9, [100.0, 81.2, 94.9, 81.4]),
    (4, 9, [100.0, 83.0, 95.6, 81.8]),
    (1, 25, [100.0, 98.5, 99.5, 90.6]),
    (2, 25, [100.0, 94.6, 99.6, 92.0]),
    (3, 25, [100.0, 94.8, 99.6, 92.6]),
    (4, 25, [100.0, 94.9, 99.6, 92.6]),
];

/// Cohen's kappa for the temporally uncorrelated scenario with M = 2,
/// keyed by (looks, rule label).
pub const IDENTITY_M2_KAPPA: &[(usize, &str, f64)] = &[
    (25, "aic", 0.83),
    (25, "bic", 0.95),
    (25, "gic", 0.94),
    (25, "hqc", 0.89),
    (49, "aic", 0.84),
    (49, "bic", 0.98),
    (49, "gic", 0.95),
    (49, "hqc", 0.93),
];

/// Cohen's kappa for the M = 2, K = 25, rho = 0.9, BIC comparison, keyed by
/// classifier label.
pub const RHO09_M2_K25_BIC_KAPPA: &[(&str, f64)] = &[("flipflop", 0.95), ("tusml", 0.78)];

pub fn bic_rho09_accuracy(passes: usize, looks: usize) -> Option<[f64; 4]> {
    BIC_RHO09_ACCURACY
        .iter()
        .find(|(m, k, _)| *m == passes && *k == looks)
        .map(|(_, _, acc)| *acc)
}

pub fn identity_m2_kappa(looks: usize, rule: &str) -> Option<f64> {
    IDENTITY_M2_KAPPA
        .iter()
        .find(|(k, r, _)| *k == looks && *r == rule)
        .map(|(_, _, v)| *v)
}

pub fn rho09_m2_k25_bic_kappa(classifier: &str) -> Option<f64> {
    RHO09_M2_K25_BIC_KAPPA
        .iter()
        .find(|(c, _)| *c == classifier)
        .map(|(_, v)| *v)
}

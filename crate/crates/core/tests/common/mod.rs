//! Helpers shared by the integration suites: independent oracles, proptest
//! strategies and property checks.

#![allow(dead_code)]

use hybrid_dof::beamform::{
    design_two_user_zf, factor_hybrid, leakage, min_leakage_combiners, receiver_leakage,
    HybridDesign, UserBeams,
};
use hybrid_dof::cxmat::{
    logdet_hpd, nullspace, qr, rank, svd, ComplexMatrix, Rng, C64, DEFAULT_REL_TOL,
};
use hybrid_dof::dof_calc::alloc_two_user;
use hybrid_dof::model::{draw_channels, ChannelRealization, NetworkConfig, UserProfile};
use hybrid_dof::rate::{interference_free_bits, mc_sweep, sum_rate_instant, Scheme};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub fn sym(k: usize, m: usize, mp: usize, n: usize, np: usize) -> NetworkConfig {
    NetworkConfig::symmetric(k, UserProfile::new(m, mp, n, np).unwrap()).unwrap()
}

pub fn two(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> NetworkConfig {
    NetworkConfig::new(vec![
        UserProfile::new(a.0, a.1, a.2, a.3).unwrap(),
        UserProfile::new(b.0, b.1, b.2, b.3).unwrap(),
    ])
    .unwrap()
}

/// Largest `d1 + d2` over all integer tuples `(d1, d11, d10, d2, d22, d20)`
/// meeting the two-user zero-forcing conditions, by exhaustive search.
/// `d10 = d1 - d11` and `d20 = d2 - d22` are implied, so four loops cover
/// every candidate.
pub fn brute_force_two_user(a: (usize, usize, usize, usize), b: (usize, usize, usize, usize)) -> usize {
    let (m1, mp1, n1, np1) = a;
    let (m2, mp2, n2, np2) = b;
    let null1 = mp1.saturating_sub(np2);
    let null2 = mp2.saturating_sub(np1);
    let mut best = 0;
    for d1 in 0..=m1.min(n1) {
        for d11 in 0..=d1.min(null1) {
            let d10 = d1 - d11;
            for d2 in 0..=m2.min(n2) {
                for d22 in 0..=d2.min(null2) {
                    let d20 = d2 - d22;
                    if d1 + d20 <= np1 && d2 + d10 <= np2 {
                        best = best.max(d1 + d2);
                    }
                }
            }
        }
    }
    best
}

/// Eigenvalues (ascending) of a Hermitian matrix through cyclic Jacobi on
/// its real symmetric `2n x 2n` embedding `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is the Hermitian spectrum with every value doubled.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let m = 2 * n;
    let mut s = vec![vec![0.0f64; m]; m];
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            s[i][j] = z.re;
            s[i + n][j + n] = z.re;
            s[i][j + n] = -z.im;
            s[i + n][j] = z.im;
        }
    }
    for _ in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m - 1 {
            for q in p + 1..m {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let (skp, skq) = (s[k][p], s[k][q]);
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..m {
                    let (spk, sqk) = (s[p][k], s[q][k]);
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
            }
        }
    }
    let mut diag: Vec<f64> = (0..m).map(|i| s[i][i]).collect();
    diag.sort_by(f64::total_cmp);
    diag.into_iter().step_by(2).collect()
}

/// A matrix with entries drawn uniformly from the unit square.
pub fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), r * c).prop_map(move |v| {
            let data = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
            ComplexMatrix::from_vec(r, c, data).unwrap()
        })
    })
}

/// A product of an `r x k` and a `k x c` matrix, so rank at most `k`.
pub fn low_rank_matrix(max_dim: usize) -> impl Strategy<Value = (ComplexMatrix, usize)> {
    (1..=max_dim, 1..=max_dim, 1..=max_dim, any::<u64>()).prop_map(|(r, c, k, seed)| {
        let mut rng = Rng::new(seed);
        let a = hybrid_dof::cxmat::gaussian_matrix(r, k, &mut rng).unwrap();
        let b = hybrid_dof::cxmat::gaussian_matrix(k, c, &mut rng).unwrap();
        (&a * &b, k.min(r).min(c))
    })
}

pub fn random_unitary(n: usize, seed: u64) -> ComplexMatrix {
    let g = hybrid_dof::cxmat::gaussian_matrix(n, n, &mut Rng::new(seed)).unwrap();
    qr(&g).unwrap().q
}

fn rel_frob(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm() / b.frobenius_norm().max(f64::MIN_POSITIVE)
}

pub fn check_svd_round_trip(a: &ComplexMatrix) -> Result<(), TestCaseError> {
    let f = svd(a).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let p = f.s.len();
    prop_assert_eq!(p, a.rows().min(a.cols()));
    prop_assert!(f.s.windows(2).all(|w| w[0] >= w[1]) && f.s.iter().all(|&x| x >= 0.0));
    let back = &(&f.u * &ComplexMatrix::diag_real(&f.s)) * &f.v.adjoint();
    let err = rel_frob(&back, a);
    prop_assert!(err < 1e-12, "reconstruction error {}", err);
    prop_assert!(f.u.orthonormality_error() < 1e-10);
    prop_assert!(f.v.orthonormality_error() < 1e-10);
    Ok(())
}

pub fn check_nullspace(a: &ComplexMatrix) -> Result<(), TestCaseError> {
    let n = nullspace(a, DEFAULT_REL_TOL).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let r = rank(a, DEFAULT_REL_TOL).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(r + n.cols(), a.cols(), "rank-nullity");
    if n.cols() > 0 {
        prop_assert!(n.orthonormality_error() < 1e-10);
        let bound = 10.0 * DEFAULT_REL_TOL * a.frobenius_norm() * a.cols() as f64;
        prop_assert!((a * &n).frobenius_norm() <= bound);
    }
    Ok(())
}

pub fn check_logdet_unitary_invariance(a: &ComplexMatrix, seed: u64) -> Result<(), TestCaseError> {
    let n = a.rows();
    let hpd = &a.gram_outer() + &ComplexMatrix::identity(n);
    let u = random_unitary(n, seed);
    let rotated = &(&u * &hpd) * &u.adjoint();
    let l0 = logdet_hpd(&hpd).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let l1 = logdet_hpd(&rotated).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((l0 - l1).abs() < 1e-9, "{} vs {}", l0, l1);
    Ok(())
}

/// Two-user zero-forcing design with the calculator's allocation.
pub fn zf_two_user(cfg: &NetworkConfig, seed: u64) -> Option<(HybridDesign, ChannelRealization)> {
    let mut rng = Rng::new(seed);
    let r = draw_channels(cfg, 1, &mut rng).unwrap().remove(0);
    let alloc = alloc_two_user(cfg).unwrap();
    design_two_user_zf(cfg, &r, &alloc, DEFAULT_REL_TOL, &mut rng)
        .ok()
        .map(|d| (d, r))
}

/// Arbitrary (not interference-free) design with random unit analog
/// columns and random unitary digital stages.
pub fn random_design(cfg: &NetworkConfig, streams: &[usize], seed: u64) -> HybridDesign {
    let mut rng = Rng::new(seed);
    let users = cfg
        .users
        .iter()
        .zip(streams)
        .map(|(u, &d)| {
            let tx = hybrid_dof::cxmat::gaussian_matrix(u.m_ant, d, &mut rng).unwrap();
            let rx = hybrid_dof::cxmat::gaussian_matrix(u.n_ant, d, &mut rng).unwrap();
            let (analog_tx, _) = factor_hybrid(&tx, d).unwrap();
            UserBeams {
                analog_tx,
                digital_tx: random_unitary(d, rng.next_u64()),
                analog_rx: qr(&rx).unwrap().q,
                digital_rx: random_unitary(d, rng.next_u64()),
                streams: d,
                direct_singulars: vec![1.0; d],
            }
        })
        .collect();
    HybridDesign { users, slots: 1 }
}

pub fn check_unitary_combiner_invariance(
    design: &HybridDesign,
    r: &ChannelRealization,
    power: f64,
    seed: u64,
) -> Result<(), TestCaseError> {
    let before = sum_rate_instant(design, r, power).unwrap();
    let mut rotated = design.clone();
    for (i, u) in rotated.users.iter_mut().enumerate() {
        let q = random_unitary(u.streams, seed.wrapping_add(i as u64));
        u.digital_rx = &u.digital_rx * &q;
    }
    let after = sum_rate_instant(&rotated, r, power).unwrap();
    for (a, b) in before.iter().zip(&after) {
        prop_assert!((a - b).abs() < 1e-9, "{} vs {}", a, b);
    }
    Ok(())
}

pub fn check_leakage_linearity(
    design: &HybridDesign,
    r: &ChannelRealization,
    powers: &[f64],
    factor: f64,
) -> Result<(), TestCaseError> {
    let base = leakage(design, r, powers).unwrap();
    let scaled: Vec<f64> = powers.iter().map(|p| p * factor).collect();
    let more = leakage(design, r, &scaled).unwrap();
    prop_assert!(base > 0.0);
    prop_assert!((more - factor * base).abs() <= 1e-12 * factor * base);
    Ok(())
}

pub fn check_sweep_determinism(cfg: &NetworkConfig, scheme: &Scheme, seed: u64) -> Result<(), TestCaseError> {
    let grid = [0.0, 20.0, 40.0];
    let a = mc_sweep(cfg, scheme, &grid, 3, seed).unwrap();
    let b = mc_sweep(cfg, scheme, &grid, 3, seed).unwrap();
    prop_assert_eq!(a, b);
    Ok(())
}

pub fn check_zf_matches_closed_form(design: &HybridDesign, r: &ChannelRealization) -> Result<(), TestCaseError> {
    for snr in [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0] {
        let p = 10f64.powf(snr / 10.0);
        let got: f64 = sum_rate_instant(design, r, p).unwrap().iter().sum();
        let want: f64 = interference_free_bits(design, p).iter().sum();
        prop_assert!((got - want).abs() <= 1e-6, "{} dB: {} vs {}", snr, got, want);
    }
    Ok(())
}

/// The least-eigenvector combiner never leaks more than a random
/// orthonormal one with the same number of columns.
pub fn check_receiver_update_optimal(cfg: &NetworkConfig, streams: &[usize], seed: u64) -> Result<(), TestCaseError> {
    let mut rng = Rng::new(seed);
    let r = draw_channels(cfg, 1, &mut rng).unwrap().remove(0);
    let tx: Vec<ComplexMatrix> = cfg
        .users
        .iter()
        .zip(streams)
        .map(|(u, &d)| qr(&hybrid_dof::cxmat::gaussian_matrix(u.m_ant, d, &mut rng).unwrap()).unwrap().q)
        .collect();
    let powers = vec![1.0; cfg.k()];
    let best = min_leakage_combiners(&r, &tx, streams, &powers).unwrap();
    for i in 0..cfg.k() {
        let opt = receiver_leakage(&r, i, &best[i], &tx, &powers).unwrap();
        let other = qr(&hybrid_dof::cxmat::gaussian_matrix(cfg.users[i].n_ant, streams[i], &mut rng).unwrap())
            .unwrap()
            .q;
        let alt = receiver_leakage(&r, i, &other, &tx, &powers).unwrap();
        prop_assert!(opt <= alt + 1e-12 * alt.max(1.0), "{} > {}", opt, alt);
    }
    Ok(())
}

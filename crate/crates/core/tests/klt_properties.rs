use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoscan::klt::inverse_transform;
use thermoscan::{compute_basis, transform, KltMode, ObservationSet};

fn random_set(rng: &mut ChaCha8Rng, m: usize, n: usize) -> ObservationSet {
    let vectors: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    ObservationSet::new(&vectors, KltMode::Column).unwrap()
}

/// Coefficients `c` of `det(lambda I - C) = lambda^m + c[1] lambda^(m-1) + ... + c[m]`
/// by the Faddeev-LeVerrier recursion.
fn char_poly(c: &[f64], m: usize) -> Vec<f64> {
    let matmul = |a: &[f64], b: &[f64]| {
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..m {
                for j in 0..m {
                    out[i * m + j] += a[i * m + k] * b[k * m + j];
                }
            }
        }
        out
    };
    let mut coeffs = vec![1.0];
    let mut mk = vec![0.0; m * m];
    for k in 1..=m {
        // M_k = C M_{k-1} + c_{k-1} I
        let mut next = matmul(c, &mk);
        for i in 0..m {
            next[i * m + i] += coeffs[k - 1];
        }
        let cm = matmul(c, &next);
        let trace: f64 = (0..m).map(|i| cm[i * m + i]).sum();
        coeffs.push(-trace / k as f64);
        mk = next;
    }
    coeffs
}

/// All roots of a monic polynomial by Durand-Kerner iteration.
fn roots(coeffs: &[f64]) -> Vec<f64> {
    type C = (f64, f64);
    let mul = |a: C, b: C| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let sub = |a: C, b: C| (a.0 - b.0, a.1 - b.1);
    let div = |a: C, b: C| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let deg = coeffs.len() - 1;
    let eval = |z: C| coeffs.iter().fold((0.0, 0.0), |acc, &c| {
        let p = mul(acc, z);
        (p.0 + c, p.1)
    });
    // standard starting points: powers of 0.4 + 0.9i
    let mut z: Vec<C> = Vec::with_capacity(deg);
    let mut p = (1.0, 0.0);
    for _ in 0..deg {
        p = mul(p, (0.4, 0.9));
        z.push(p);
    }
    for _ in 0..2000 {
        for i in 0..deg {
            let mut denom = (1.0, 0.0);
            for j in 0..deg {
                if i != j {
                    denom = mul(denom, sub(z[i], z[j]));
                }
            }
            z[i] = sub(z[i], div(eval(z[i]), denom));
        }
    }
    let mut re: Vec<f64> = z.iter().map(|c| c.0).collect();
    re.sort_by(|a, b| b.total_cmp(a));
    re
}

#[test]
fn random_sets_satisfy_transform_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for case in 0..100 {
        let m = rng.random_range(1..=8);
        let n = rng.random_range(1..=16);
        let obs = random_set(&mut rng, m, n);
        let basis = compute_basis(&obs);
        let c = &basis.covariance;

        for i in 0..m {
            for j in 0..m {
                assert_eq!(c[i * m + j], c[j * m + i], "case {case}: covariance asymmetric");
            }
        }
        let lam = &basis.eigenvalues;
        assert!(lam.iter().all(|&l| l >= -1e-10), "case {case}: {lam:?}");
        assert!(lam.windows(2).all(|w| w[0] >= w[1]), "case {case}: not descending");
        let trace: f64 = (0..m).map(|i| c[i * m + i]).sum();
        assert!((lam.iter().sum::<f64>() - trace).abs() <= 1e-8);

        // A C A^T is diagonal with the eigenvalues on the diagonal
        for i in 0..m {
            for j in 0..m {
                let v: f64 = (0..m)
                    .flat_map(|k| (0..m).map(move |l| (k, l)))
                    .map(|(k, l)| basis.row(i)[k] * c[k * m + l] * basis.row(j)[l])
                    .sum();
                let want = if i == j { lam[i] } else { 0.0 };
                assert!((v - want).abs() <= 1e-8, "case {case}: ({i},{j}) {v} vs {want}");
            }
        }

        let k = transform(&obs, &basis).unwrap();
        for (y, ki) in obs.vectors().zip(&k) {
            let back = inverse_transform(ki, &basis);
            for (a, b) in back.iter().zip(y) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn small_dimensions_match_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for case in 0..100 {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(m + 2..=16);
        let basis = compute_basis(&random_set(&mut rng, m, n));
        let want = roots(&char_poly(&basis.covariance, m));
        for (got, want) in basis.eigenvalues.iter().zip(&want) {
            assert!((got - want).abs() <= 1e-8, "case {case}: {:?} vs {want:?}", basis.eigenvalues);
        }
    }
}

#[test]
fn leading_direction_maximizes_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let m = rng.random_range(2..=6);
        let basis = compute_basis(&random_set(&mut rng, m, 12));
        let c = &basis.covariance;
        for _ in 0..50 {
            let mut u: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            u.iter_mut().for_each(|x| *x /= norm);
            let var: f64 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| u[i] * c[i * m + j] * u[j]).sum();
            assert!(var <= basis.eigenvalues[0] + 1e-10);
        }
    }
}

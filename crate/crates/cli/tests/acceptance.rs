//! Acceptance suite. Each test implements one release criterion at its
//! stated tolerance and prints a single PASS line (visible with
//! `cargo test --test acceptance -- --nocapture`). Criterion 8 needs
//! externally downloaded data and is ignored by default; see its doc
//! comment for the environment variables that enable it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eclab_core::complexity::{
    compute_complexity_eigen, compute_complexity_fixed_point, rescale_minmax,
};
use eclab_core::dynamics::{detect_events, EventKind, SpecializationPanel};
use eclab_core::econometrics::{
    logit, ols, tsls, Covariate, DataTable, ModelSpec, SeType, Transform,
};
use eclab_core::relatedness::{proximity, relatedness_density};
use eclab_core::specialization::{rca, CountMatrix, SpecializationMatrix};

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:02}")).collect()
}

fn binary(rows: &[&[u8]]) -> SpecializationMatrix {
    let entries = DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]);
    SpecializationMatrix::from_binary(labels("c", rows.len()), labels("l", rows[0].len()), entries, None)
        .unwrap()
}

/// Criterion 1: on the 3x3 nested matrix both methods return the known
/// spectral coordinates within 1e-4 and the eigen path reports the second
/// eigenvalue 0.25 within 1e-10, in under a second.
#[test]
fn criterion_1_spectral_oracle() {
    let start = Instant::now();
    let m = binary(&[&[1, 1, 1], &[1, 1, 0], &[1, 0, 0]]);
    let want_eci = [1.224_744_871_391_589, 0.0, -1.224_744_871_391_589];
    let want_pci = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];

    let eigen = compute_complexity_eigen(&m).unwrap();
    let fixed = compute_complexity_fixed_point(&m, 1e-9, 1000).unwrap();
    for scores in [&eigen, &fixed] {
        for (got, want) in scores.eci_z.iter().zip(want_eci) {
            assert!((got - want).abs() < 1e-4, "eci {got} vs {want}");
        }
        for (got, want) in scores.pci_z.iter().zip(want_pci) {
            assert!((got - want).abs() < 1e-4, "pci {got} vs {want}");
        }
    }
    let lambda = eigen.second_eigenvalue.unwrap();
    assert!((lambda - 0.25).abs() <= 1e-10, "second eigenvalue {lambda}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: spectral oracle on nested 3x3 (eigenvalue {lambda:.12}, {elapsed:?})");
}

fn random_valid_matrix(rng: &mut ChaCha8Rng) -> SpecializationMatrix {
    loop {
        let n = rng.random_range(8..=20);
        let m = rng.random_range(8..=20);
        let density = rng.random_range(0.3..0.7);
        let entries = DMatrix::from_fn(n, m, |_, _| u8::from(rng.random::<f64>() < density));
        let matrix =
            SpecializationMatrix::from_binary(labels("c", n), labels("l", m), entries, None).unwrap();
        if matrix.diversity().iter().all(|&k| k > 0) && matrix.ubiquity().iter().all(|&k| k > 0) {
            return matrix;
        }
    }
}

/// Criterion 2: fixed-point and eigen country scores agree within 1e-6 in
/// the max norm over 200 random non-degenerate matrices, in under 10 s.
#[test]
fn criterion_2_method_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut accepted = 0;
    let mut worst: f64 = 0.0;
    while accepted < 200 {
        let m = random_valid_matrix(&mut rng);
        let Ok(eigen) = compute_complexity_eigen(&m) else {
            continue; // repeated eigenvalue or degenerate draw
        };
        let Ok(fixed) = compute_complexity_fixed_point(&m, 1e-12, 20_000) else {
            continue;
        };
        let max_delta = eigen
            .eci_z
            .iter()
            .zip(&fixed.eci_z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_delta < 1e-6, "methods disagree by {max_delta}");
        worst = worst.max(max_delta);
        accepted += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("ACCEPTANCE 2 PASS: 200 random matrices, max method gap {worst:.2e} ({elapsed:?})");
}

/// Criterion 3: RCA, proximity, and density match independent loop
/// implementations within 1e-12 on 100 random instances; proximity is
/// exactly symmetric and density stays in [0, 1].
#[test]
fn criterion_3_brute_force_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3033);
    for _ in 0..100 {
        let n = rng.random_range(5..=12);
        let m = rng.random_range(5..=10);

        // RCA against the definition.
        let counts = DMatrix::from_fn(n, m, |_, _| (rng.random::<f64>() * 400.0).floor() + 1.0);
        let x = CountMatrix::new(labels("c", n), labels("l", m), counts, 2020).unwrap();
        let r = rca(&x);
        let c = x.counts();
        let total: f64 = c.iter().sum();
        for i in 0..n {
            for j in 0..m {
                let row: f64 = (0..m).map(|jj| c[(i, jj)]).sum();
                let col: f64 = (0..n).map(|ii| c[(ii, j)]).sum();
                let expect = c[(i, j)] * total / (row * col);
                assert!((r.values()[(i, j)] - expect).abs() <= 1e-12 * expect.max(1.0));
            }
        }

        // Proximity and density against triple loops.
        let mat = loop {
            let entries = DMatrix::from_fn(n, m, |_, _| u8::from(rng.random::<f64>() < 0.45));
            let mat =
                SpecializationMatrix::from_binary(labels("c", n), labels("l", m), entries, None).unwrap();
            if mat.diversity().iter().all(|&k| k > 0) && mat.ubiquity().iter().all(|&k| k > 0) {
                break mat;
            }
        };
        let phi = proximity(&mat).unwrap();
        let entries = mat.entries();
        for a in 0..m {
            for b in 0..m {
                assert_eq!(phi.get(a, b).to_bits(), phi.get(b, a).to_bits(), "symmetry");
                let expect = if a == b {
                    1.0
                } else {
                    let cooc: u32 = (0..n)
                        .map(|cc| u32::from(entries[(cc, a)] == 1 && entries[(cc, b)] == 1))
                        .sum();
                    cooc as f64 / mat.ubiquity()[a].max(mat.ubiquity()[b]) as f64
                };
                assert!((phi.get(a, b) - expect).abs() <= 1e-12);
            }
        }
        let omega = relatedness_density(&mat, &phi).unwrap();
        for ci in 0..n {
            for l in 0..m {
                let mut numer = 0.0;
                let mut denom = 0.0;
                for other in 0..m {
                    denom += phi.get(l, other);
                    if entries[(ci, other)] == 1 {
                        numer += phi.get(l, other);
                    }
                }
                let got = omega.values()[(ci, l)];
                assert!((got - numer / denom).abs() <= 1e-12);
                assert!((0.0..=1.0).contains(&got), "omega {got}");
            }
        }
    }
    println!("ACCEPTANCE 3 PASS: RCA/proximity/density match brute force on 100 instances");
}

/// Criterion 4: the published-series fixture: a raw score of -0.453 in a
/// series spanning [-2.221, 2.538] rescales to -0.257 within 0.001.
#[test]
fn criterion_4_rescale_fixture() {
    let rescaled = rescale_minmax(&[-2.221, -0.453, 2.538]).unwrap();
    let got = rescaled.values[1];
    assert!((got - (-0.257)).abs() <= 1e-3, "rescaled {got}");
    println!("ACCEPTANCE 4 PASS: rescale fixture -0.453 -> {got:.4}");
}

/// Criterion 5: of all 16 four-year binary patterns, exactly (0,0,1,1) is
/// an entry and (1,1,0,0) an exit; everything else is no event.
#[test]
fn criterion_5_event_classification() {
    let years = [2020, 2021, 2022, 2023];
    for bits in 0u8..16 {
        let pattern = [(bits >> 3) & 1, (bits >> 2) & 1, (bits >> 1) & 1, bits & 1];
        let items = years
            .iter()
            .zip(pattern)
            .map(|(&year, bit)| {
                let m = SpecializationMatrix::from_binary(
                    vec!["AAA".into(), "ZZZ".into()],
                    vec!["lang".into(), "anchor".into()],
                    DMatrix::from_row_slice(2, 2, &[bit, 1, 0, 1]),
                    Some(year),
                )
                .unwrap();
                (year, m)
            })
            .collect();
        let panel = SpecializationPanel::from_yearly(items).unwrap();
        let events = detect_events(&panel, &[2020, 2021], &[2022, 2023]).unwrap();
        let got = events
            .records
            .iter()
            .find(|r| r.country == "AAA" && r.activity == "lang")
            .map(|r| r.kind);
        let want = match pattern {
            [0, 0, 1, 1] => Some(EventKind::Entry),
            [1, 1, 0, 0] => Some(EventKind::Exit),
            _ => None,
        };
        assert_eq!(got, want, "pattern {pattern:?}");
    }
    println!("ACCEPTANCE 5 PASS: all 16 four-year patterns classified correctly");
}

// --- criterion 6 helpers ---------------------------------------------------

fn noise(i: usize, salt: u64) -> f64 {
    let mut z = (i as u64).wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z % 1_000_000) as f64 / 500_000.0 - 1.0
}

fn solve_gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    x
}

struct Oracle {
    beta: Vec<f64>,
    xtx_inv: Vec<Vec<f64>>,
    residuals: Vec<f64>,
}

fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> Oracle {
    let n = x.len();
    let k = x[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            xty[a] += x[i][a] * y[i];
            for b in 0..k {
                xtx[a][b] += x[i][a] * x[i][b];
            }
        }
    }
    let beta = solve_gauss(xtx.clone(), xty);
    let mut xtx_inv = vec![vec![0.0; k]; k];
    for col in 0..k {
        let mut e = vec![0.0; k];
        e[col] = 1.0;
        let s = solve_gauss(xtx.clone(), e);
        for row in 0..k {
            xtx_inv[row][col] = s[row];
        }
    }
    let residuals = (0..n)
        .map(|i| y[i] - (0..k).map(|a| x[i][a] * beta[a]).sum::<f64>())
        .collect();
    Oracle {
        beta,
        xtx_inv,
        residuals,
    }
}

fn sandwich_se(x: &[Vec<f64>], oracle: &Oracle, clusters: Option<&[usize]>) -> Vec<f64> {
    let n = x.len();
    let k = x[0].len();
    let mut meat = vec![vec![0.0; k]; k];
    match clusters {
        None => {
            for i in 0..n {
                let w = oracle.residuals[i] * oracle.residuals[i];
                for a in 0..k {
                    for b in 0..k {
                        meat[a][b] += w * x[i][a] * x[i][b];
                    }
                }
            }
        }
        Some(codes) => {
            let g = codes.iter().max().unwrap() + 1;
            let mut sums = vec![vec![0.0; k]; g];
            for i in 0..n {
                for a in 0..k {
                    sums[codes[i]][a] += oracle.residuals[i] * x[i][a];
                }
            }
            for s in &sums {
                for a in 0..k {
                    for b in 0..k {
                        meat[a][b] += s[a] * s[b];
                    }
                }
            }
        }
    }
    let factor = match clusters {
        None => n as f64 / (n - k) as f64,
        Some(codes) => {
            let g = (codes.iter().max().unwrap() + 1) as f64;
            (g / (g - 1.0)) * ((n as f64 - 1.0) / (n - k) as f64)
        }
    };
    (0..k)
        .map(|a| {
            let mut v = 0.0;
            for c1 in 0..k {
                for c2 in 0..k {
                    v += oracle.xtx_inv[a][c1] * meat[c1][c2] * oracle.xtx_inv[c2][a];
                }
            }
            (v * factor).sqrt()
        })
        .collect()
}

fn nelder_mead_logit(x: &[Vec<f64>], y: &[f64], k: usize) -> Vec<f64> {
    let neg_ll = |beta: &[f64]| -> f64 {
        let mut total = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            let eta: f64 = xi.iter().zip(beta).map(|(a, b)| a * b).sum();
            total += yi * eta - (eta.max(0.0) + (-eta.abs()).exp().ln_1p());
        }
        -total
    };
    let mut simplex: Vec<Vec<f64>> = vec![vec![0.0; k]];
    for i in 0..k {
        let mut v = vec![0.0; k];
        v[i] = 0.5;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|b| neg_ll(b)).collect();
    for _ in 0..30_000 {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let (best, worst, second_worst) = (order[0], order[k], order[k - 1]);
        if (values[worst] - values[best]).abs() < 1e-13 {
            break;
        }
        let centroid: Vec<f64> = (0..k)
            .map(|j| order[..k].iter().map(|&idx| simplex[idx][j]).sum::<f64>() / k as f64)
            .collect();
        let reflect: Vec<f64> = (0..k).map(|j| 2.0 * centroid[j] - simplex[worst][j]).collect();
        let fr = neg_ll(&reflect);
        if fr < values[best] {
            let expand: Vec<f64> = (0..k).map(|j| 3.0 * centroid[j] - 2.0 * simplex[worst][j]).collect();
            let fe = neg_ll(&expand);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> = (0..k)
                .map(|j| centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]))
                .collect();
            let fc = neg_ll(&contract);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                for &idx in &order[1..] {
                    let shrunk: Vec<f64> = (0..k)
                        .map(|j| simplex[best][j] + 0.5 * (simplex[idx][j] - simplex[best][j]))
                        .collect();
                    values[idx] = neg_ll(&shrunk);
                    simplex[idx] = shrunk;
                }
            }
        }
    }
    let best = (0..simplex.len())
        .min_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    simplex[best].clone()
}

fn table_from(columns: &[(&str, Vec<f64>)]) -> DataTable {
    let mut table = DataTable::new();
    for (name, values) in columns {
        table
            .add_numeric(*name, values.iter().copied().map(Some).collect())
            .unwrap();
    }
    table
}

fn simple_spec(covariates: &[&str], se: SeType) -> ModelSpec {
    ModelSpec {
        outcome: "y".into(),
        outcome_transform: Transform::None,
        covariates: covariates.iter().map(|c| Covariate::raw(*c)).collect(),
        fixed_effects: vec![],
        se,
        sample: None,
    }
}

/// Criterion 6: the econometrics battery against independent oracles, in
/// under 30 s.
#[test]
fn criterion_6_econometrics_oracles() {
    let start = Instant::now();

    // (a) OLS == normal equations; HC1 and CR1 match the direct sandwich.
    let n = 30;
    let mut x_rows = Vec::new();
    let mut ys = Vec::new();
    let mut clusters = Vec::new();
    for i in 0..n {
        let x1 = noise(i, 61) * 2.0;
        let x2 = noise(i, 62) + 0.3 * x1;
        let e = noise(i, 63) * (1.0 + x1.abs());
        x_rows.push(vec![1.0, x1, x2]);
        ys.push(0.4 + 1.1 * x1 - 0.6 * x2 + e);
        clusters.push(i % 5);
    }
    let mut table = table_from(&[
        ("y", ys.clone()),
        ("x1", x_rows.iter().map(|r| r[1]).collect()),
        ("x2", x_rows.iter().map(|r| r[2]).collect()),
    ]);
    table
        .add_categorical("cluster", clusters.iter().map(|c| Some(format!("g{c}"))).collect())
        .unwrap();
    let oracle = ols_oracle(&x_rows, &ys);

    let classical = ols(&table, &simple_spec(&["x1", "x2"], SeType::Classical)).unwrap();
    for (got, want) in classical.coefficients.iter().zip(&oracle.beta) {
        assert!((got - want).abs() <= 1e-10, "ols {got} vs {want}");
    }
    let robust = ols(&table, &simple_spec(&["x1", "x2"], SeType::Robust)).unwrap();
    for (got, want) in robust.std_errors.iter().zip(&sandwich_se(&x_rows, &oracle, None)) {
        assert!((got - want).abs() <= 1e-10, "hc1 {got} vs {want}");
    }
    let clustered = ols(&table, &simple_spec(&["x1", "x2"], SeType::Clustered("cluster".into()))).unwrap();
    for (got, want) in clustered
        .std_errors
        .iter()
        .zip(&sandwich_se(&x_rows, &oracle, Some(&clusters)))
    {
        assert!((got - want).abs() <= 1e-10, "cr1 {got} vs {want}");
    }

    // (b) logit against a direct likelihood search.
    let n = 50;
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for i in 0..n {
        let x1 = noise(i, 71) * 1.5;
        let x2 = noise(i, 72);
        let p = 1.0 / (1.0 + (-(0.3 + 1.1 * x1 - 0.8 * x2)).exp());
        ly.push(if (noise(i, 73) + 1.0) / 2.0 < p { 1.0 } else { 0.0 });
        lx.push(vec![1.0, x1, x2]);
    }
    let logit_table = table_from(&[
        ("y", ly.clone()),
        ("x1", lx.iter().map(|r| r[1]).collect()),
        ("x2", lx.iter().map(|r| r[2]).collect()),
    ]);
    let fit = logit(&logit_table, &simple_spec(&["x1", "x2"], SeType::Classical)).unwrap();
    let searched = nelder_mead_logit(&lx, &ly, 3);
    for (got, want) in fit.coefficients.iter().zip(&searched) {
        assert!((got - want).abs() <= 1e-4, "logit {got} vs {want}");
    }

    // (c) 2SLS with instrument == regressor reproduces OLS; DWH p ~ 1.
    let xs: Vec<f64> = (0..40).map(|i| noise(i, 81) * 2.0 + 0.3).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| 1.0 + 2.0 * x + noise(i, 82)).collect();
    let iv_table = table_from(&[("y", ys), ("x", xs.clone()), ("z", xs)]);
    let model = simple_spec(&["x"], SeType::Robust);
    let iv = tsls(&iv_table, &model, "x", "z").unwrap();
    let plain = ols(&iv_table, &model).unwrap();
    for (a, b) in iv.second_stage.coefficients.iter().zip(&plain.coefficients) {
        assert!((a - b).abs() <= 1e-10, "2sls {a} vs ols {b}");
    }
    assert!(iv.dwh_p_value > 0.99, "degenerate DWH p {}", iv.dwh_p_value);

    // (d) Monte Carlo: n = 500, structural coefficient 1.0, planted OLS
    // bias 0.5 (shared uniform error, all variances 1/3).
    let replications = 200;
    let mut tsls_estimates = Vec::with_capacity(replications);
    let mut ols_estimates = Vec::with_capacity(replications);
    for rep in 0..replications {
        let salt = 9000 + rep as u64;
        let mut xs = Vec::with_capacity(500);
        let mut ys = Vec::with_capacity(500);
        let mut zs = Vec::with_capacity(500);
        for i in 0..500 {
            let z = noise(i, salt);
            let u = noise(i, salt.wrapping_add(977));
            let ex = noise(i, salt.wrapping_add(1999));
            let ey = noise(i, salt.wrapping_add(3001));
            let x = z + u + ex;
            ys.push(1.0 * x + 1.5 * u + ey);
            xs.push(x);
            zs.push(z);
        }
        let mc_table = table_from(&[("y", ys), ("x", xs), ("z", zs)]);
        let model = simple_spec(&["x"], SeType::Robust);
        tsls_estimates.push(tsls(&mc_table, &model, "x", "z").unwrap().second_stage.coefficients[1]);
        ols_estimates.push(ols(&mc_table, &model).unwrap().coefficients[1]);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mc_se = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64 / v.len() as f64).sqrt()
    };
    let tsls_mean = mean(&tsls_estimates);
    let ols_mean = mean(&ols_estimates);
    let planted_bias = 0.5;
    assert!(
        (tsls_mean - 1.0).abs() <= 3.0 * mc_se(&tsls_estimates),
        "2sls mean {tsls_mean} (mc se {})",
        mc_se(&tsls_estimates)
    );
    assert!(
        (ols_mean - 1.0 - planted_bias).abs() <= 4.0 * mc_se(&ols_estimates),
        "ols mean {ols_mean} vs planted bias {planted_bias}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "ACCEPTANCE 6 PASS: econometrics oracles (2SLS mean {tsls_mean:.4}, OLS mean {ols_mean:.4}, {elapsed:?})"
    );
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Criterion 7: the full pipeline on the bundled fixture is byte-identical
/// across two runs and across single- vs multi-thread environments.
#[test]
fn criterion_7_pipeline_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let f = fixtures();
    let config_path = tmp.path().join("config.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"[inputs]
languages = "{}"
indicators = "{}"
adjacency = "{}"
exclusions = "{}"
external_scores = "{}"

[cleaning]
top_n = 10

[output]
dir = "{}"
"#,
            f.join("languages.csv").display(),
            f.join("indicators.csv").display(),
            f.join("adjacency.csv").display(),
            f.join("exclusions.txt").display(),
            f.join("external_scores.csv").display(),
            out.display(),
        ),
    )
    .unwrap();

    let run = |threads: &str| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_eclab"))
            .args(["pipeline", "--config"])
            .arg(&config_path)
            .env("RAYON_NUM_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        let mut bytes = std::collections::BTreeMap::new();
        for entry in std::fs::read_dir(&out).unwrap() {
            let path = entry.unwrap().path();
            bytes.insert(
                path.file_name().unwrap().to_string_lossy().to_string(),
                std::fs::read(&path).unwrap(),
            );
        }
        bytes
    };

    let first = run("1");
    let second = run("1");
    let multi = run("8");
    assert_eq!(first.len(), second.len());
    for (name, bytes) in &first {
        assert_eq!(bytes, &second[name], "{name} differs across reruns");
        assert_eq!(bytes, &multi[name], "{name} differs across thread counts");
    }
    assert!(first.len() >= 14, "expected the full artifact set, got {}", first.len());
    println!("ACCEPTANCE 7 PASS: pipeline byte-identical across runs and thread counts ({} files)", first.len());
}

/// Criterion 8 (optional integration): reproduce the published-data
/// findings from current upstream files. Ignored by default because it
/// needs externally downloaded inputs; run with
/// `cargo test --test acceptance -- --ignored --nocapture` after setting
///
/// - `ECLAB_GHIG_LANGUAGES`: quarterly languages CSV
/// - `ECLAB_INDICATORS`: indicator CSV with external ECI columns
/// - `ECLAB_ADJACENCY`: country border list (optional)
///
/// Checks: DEU ranks in the software-ECI top 3 for 2020; the entry/exit
/// at-risk counts fall within 25% of 1584 and 2978; the pooled entry model
/// has a positive density and negative ubiquity coefficient, both
/// significant at 5%.
#[test]
#[ignore = "requires externally downloaded data; see doc comment"]
fn criterion_8_published_data_integration() {
    let languages = std::env::var("ECLAB_GHIG_LANGUAGES").expect("set ECLAB_GHIG_LANGUAGES");
    let indicators = std::env::var("ECLAB_INDICATORS").ok();
    let adjacency = std::env::var("ECLAB_ADJACENCY").ok();

    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut config = format!(
        "[inputs]\nlanguages = \"{languages}\"\n"
    );
    if let Some(path) = &indicators {
        config.push_str(&format!("indicators = \"{path}\"\n"));
    }
    if let Some(path) = &adjacency {
        config.push_str(&format!("adjacency = \"{path}\"\n"));
    }
    config.push_str(&format!("\n[output]\ndir = \"{}\"\n", out.display()));
    let config_path = tmp.path().join("config.toml");
    std::fs::write(&config_path, config).unwrap();

    let status = std::process::Command::new(env!("CARGO_BIN_EXE_eclab"))
        .args(["pipeline", "--config"])
        .arg(&config_path)
        .status()
        .unwrap();
    assert!(status.success());

    // DEU in the top 3 of the software ECI ranking.
    let eci = std::fs::read_to_string(out.join("eci.csv")).unwrap();
    let deu_rank: usize = eci
        .lines()
        .skip(1)
        .find_map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            (cells[0] == "DE" || cells[0] == "DEU").then(|| cells[4].parse().unwrap())
        })
        .expect("Germany present");
    assert!(deu_rank <= 3, "Germany ranked {deu_rank}");

    // At-risk set sizes near the published observation counts.
    let count_rows = |name: &str| {
        std::fs::read_to_string(out.join(name)).unwrap().lines().count() - 1
    };
    let entry_n = count_rows("transitions_entry.csv") as f64;
    let exit_n = count_rows("transitions_exit.csv") as f64;
    assert!((entry_n - 1584.0).abs() / 1584.0 <= 0.25, "entry N = {entry_n}");
    assert!((exit_n - 2978.0).abs() / 2978.0 <= 0.25, "exit N = {exit_n}");

    // Pooled entry model: density positive, ubiquity negative, both at 5%.
    let results: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    let entry = results["tables"]["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["name"] == "entry_lpm")
        .expect("entry table");
    let pooled = &entry["columns"][5]["fit"]; // density + ubiquity, no FE
    let names: Vec<String> = pooled["names"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let coef = |name: &str| {
        let idx = names.iter().position(|n| n == name).unwrap();
        (
            pooled["coefficients"][idx].as_f64().unwrap(),
            pooled["p_values"][idx].as_f64().unwrap(),
        )
    };
    let (density_coef, density_p) = coef("density");
    let (ubiquity_coef, ubiquity_p) = coef("ubiquity");
    assert!(density_coef > 0.0 && density_p < 0.05, "density {density_coef} (p {density_p})");
    assert!(ubiquity_coef < 0.0 && ubiquity_p < 0.05, "ubiquity {ubiquity_coef} (p {ubiquity_p})");
    println!("ACCEPTANCE 8 PASS: published-data integration checks");
}

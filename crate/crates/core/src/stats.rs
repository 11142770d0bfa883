//! Small shared statistics helpers. All reductions iterate in slice order.

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population standard deviation (divides by n, not n-1).
pub fn pop_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let m = mean(values);
    let ss = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    (ss / values.len() as f64).sqrt()
}

/// Z-scores against mean 0 and population standard deviation 1.
/// Returns `None` when the series has (numerically) zero variance.
pub fn standardize(values: &[f64]) -> Option<Vec<f64>> {
    let m = mean(values);
    let s = pop_std(values);
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    if !s.is_finite() || s <= scale * 1e-14 {
        return None;
    }
    Some(values.iter().map(|v| (v - m) / s).collect())
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Ranks with ties assigned the average of the covered positions (1-based).
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("non-NaN ranks"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided p-value for a correlation coefficient via the t transform
/// with n-2 degrees of freedom.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    if n < 3 {
        return f64::NAN;
    }
    let df = (n - 2) as f64;
    if (1.0 - r * r) <= 0.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("valid df");
    2.0 * (1.0 - dist.cdf(t.abs()))
}

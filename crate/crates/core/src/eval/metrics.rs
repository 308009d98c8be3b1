use super::EvalError;

fn check_pair(pred: &[f64], gold: &[f64], min_len: usize) -> Result<(), EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.len() < min_len {
        return Err(EvalError::TooShort { needed: min_len, found: pred.len() });
    }
    if pred.iter().chain(gold).any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], gold: &[f64]) -> Result<f64, EvalError> {
    check_pair(pred, gold, 1)?;
    Ok(pred.iter().zip(gold).map(|(p, g)| (p - g).abs()).sum::<f64>() / pred.len() as f64)
}

/// Mean squared error.
pub fn mse(pred: &[f64], gold: &[f64]) -> Result<f64, EvalError> {
    check_pair(pred, gold, 1)?;
    Ok(pred.iter().zip(gold).map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pred.len() as f64)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson product-moment correlation. `None` when either side has zero
/// variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Option<f64>, EvalError> {
    check_pair(x, y, 2)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    let prod = sxx * syy;
    let denom = if prod.is_normal() { prod.sqrt() } else { sxx.sqrt() * syy.sqrt() };
    Ok(Some((sxy / denom).clamp(-1.0, 1.0)))
}

/// 1-based fractional ranks; tied values share the mean of the positions
/// they cover.
pub fn rank(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) cover ranks i+1..=j+1
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>, EvalError> {
    check_pair(x, y, 2)?;
    pearson(&rank(x), &rank(y))
}

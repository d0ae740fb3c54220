use crate::{Error, Result};

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    (dx * dx + dy * dy).sqrt()
}

fn check_pairs(preds: &[Vec<[f64; 2]>], gts: &[Vec<[f64; 2]>]) -> Result<()> {
    if preds.is_empty() {
        return Err(Error::Empty("prediction set"));
    }
    if preds.len() != gts.len() {
        return Err(Error::Contract(format!("{} predictions for {} ground truths", preds.len(), gts.len())));
    }
    for (i, (p, g)) in preds.iter().zip(gts).enumerate() {
        if p.len() != g.len() || p.is_empty() {
            return Err(Error::Contract(format!(
                "agent {i}: prediction has {} steps, ground truth {}",
                p.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// Mean displacement of one trajectory pair over its steps.
pub fn scene_ade(pred: &[[f64; 2]], gt: &[[f64; 2]]) -> f64 {
    pred.iter().zip(gt).map(|(&p, &g)| dist(p, g)).sum::<f64>() / pred.len() as f64
}

/// Average displacement error over every agent and predicted step.
pub fn ade(preds: &[Vec<[f64; 2]>], gts: &[Vec<[f64; 2]>]) -> Result<f64> {
    check_pairs(preds, gts)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, g) in preds.iter().zip(gts) {
        for (&a, &b) in p.iter().zip(g) {
            total += dist(a, b);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Mean displacement at the last predicted step.
pub fn fde(preds: &[Vec<[f64; 2]>], gts: &[Vec<[f64; 2]>]) -> Result<f64> {
    check_pairs(preds, gts)?;
    let total: f64 = preds
        .iter()
        .zip(gts)
        .map(|(p, g)| dist(*p.last().expect("checked"), *g.last().expect("checked")))
        .sum();
    Ok(total / preds.len() as f64)
}

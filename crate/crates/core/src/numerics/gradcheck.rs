use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::numerics::{Graph, ModelParams, Var};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    /// Coordinates to probe; when it covers every coordinate, all are checked in order.
    pub probes: usize,
    /// Central-difference step.
    pub step: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            probes: 200,
            step: 1e-5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub probes_checked: usize,
    /// Probes whose ±step evaluation crossed a ReLU kink.
    pub probes_rejected: usize,
    pub worst_param: Option<String>,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

/// Compares the tape gradient of a scalar closure with central finite
/// differences on probed parameter coordinates.
///
/// The relative error of a probe is `|analytic - numeric| / max(1, |numeric|)`.
/// A probe is rejected and redrawn when either perturbed evaluation changes
/// the ReLU activation pattern of the unperturbed one.
pub fn gradient_check<C>(params: &mut ModelParams<f64>, cfg: &GradCheckConfig, mut loss_fn: C) -> Result<GradCheckReport>
where
    C: FnMut(&mut Graph<f64>, &ModelParams<f64>) -> Result<Var>,
{
    let mut eval = |p: &ModelParams<f64>| -> Result<(f64, u64, Graph<f64>, Var)> {
        let mut g = Graph::new();
        let loss = loss_fn(&mut g, p)?;
        let v = g.value(loss);
        if v.len() != 1 {
            return Err(Error::Dimension {
                op: "gradient_check",
                lhs: v.shape().to_vec(),
                rhs: vec![1],
            });
        }
        Ok((v.data()[0], g.relu_signature(), g, loss))
    };

    let (base, base_sig, graph, loss) = eval(params)?;
    let (again, ..) = eval(params)?;
    if base.to_bits() != again.to_bits() {
        return Err(Error::Determinism {
            first: base,
            second: again,
        });
    }
    let grads = graph.backward(loss)?;
    drop(graph);
    let mut analytic = params.clone();
    analytic.zero_grad();
    grads.accumulate_into(&mut analytic);
    let analytic = analytic.flat_grads();

    let numel = params.numel();
    let exhaustive = cfg.probes >= numel;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let max_attempts = if exhaustive { numel } else { cfg.probes * 20 };

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        probes_checked: 0,
        probes_rejected: 0,
        worst_param: None,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for attempt in 0..max_attempts {
        if !exhaustive && report.probes_checked >= cfg.probes {
            break;
        }
        let flat = if exhaustive { attempt } else { rng.random_range(0..numel) };
        let (id, offset) = params.locate(flat).expect("index within numel");
        let orig = params.block(id).value.data()[offset];

        params.block_mut(id).value.data_mut()[offset] = orig + cfg.step;
        let plus = eval(params);
        params.block_mut(id).value.data_mut()[offset] = orig - cfg.step;
        let minus = eval(params);
        params.block_mut(id).value.data_mut()[offset] = orig;
        let ((lp, sp, ..), (lm, sm, ..)) = (plus?, minus?);

        if sp != base_sig || sm != base_sig {
            report.probes_rejected += 1;
            continue;
        }
        let numeric = (lp - lm) / (2.0 * cfg.step);
        let rel = (analytic[flat] - numeric).abs() / numeric.abs().max(1.0);
        report.probes_checked += 1;
        if rel > report.max_rel_err || report.worst_param.is_none() {
            report.max_rel_err = rel.max(report.max_rel_err);
            report.worst_param = Some(format!("{}[{offset}]", params.block(id).name));
            report.worst_analytic = analytic[flat];
            report.worst_numeric = numeric;
        }
    }
    Ok(report)
}

//! Pulse counts of `I ⊕ … ⊕ I ⊕ Σ_n` across truncations.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::pulses::QoQuditDims;
use crate::synthesis::{synthesize_elementary, CleaningOptions, ElementarySigma};
use crate::verify::{elementary_target, fidelity_report};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    pub n: usize,
    pub k: usize,
    pub sigma: String,
    pub pulse_count: usize,
    pub l: usize,
    pub fidelity: f64,
    pub leakage: f64,
    pub wall_time_s: f64,
}

pub fn scaling_record(n: usize, sigma: ElementarySigma, opts: &CleaningOptions, guards: usize) -> Result<ScalingRecord> {
    let start = Instant::now();
    let e = synthesize_elementary(n, n, sigma, opts)?;
    let report = fidelity_report(&e.sequence, QoQuditDims::new(n, guards)?, &elementary_target(n, &e))?;
    Ok(ScalingRecord {
        n,
        k: n,
        sigma: sigma.to_string(),
        pulse_count: e.len(),
        l: e.l,
        fidelity: report.global_fidelity.min(1.0),
        leakage: report.leakage,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// One record per `n` in `n_min..=n_max`, computed on `threads` workers.
pub fn scaling_sweep(
    n_min: usize,
    n_max: usize,
    sigma: ElementarySigma,
    opts: &CleaningOptions,
    guards: usize,
    threads: usize,
) -> Result<Vec<ScalingRecord>> {
    if n_min < 3 || n_min > n_max {
        return invalid(format!("need 3 <= n-min <= n-max, got {n_min}..{n_max}"));
    }
    let ns: Vec<usize> = (n_min..=n_max).collect();
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<Result<ScalingRecord>>>> = Mutex::new(vec![None; ns.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, ns.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&n) = ns.get(i) else { break };
                let r = scaling_record(n, sigma, opts, guards);
                out.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    out.into_inner().expect("no worker panicked").into_iter().map(|r| r.expect("every n evaluated")).collect()
}

/// Least-squares slope of `log2(pulse_count)` against `n`.
pub fn log2_slope(records: &[ScalingRecord]) -> Option<f64> {
    if records.len() < 2 {
        return None;
    }
    let m = records.len() as f64;
    let xs: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = records.iter().map(|r| (r.pulse_count as f64).log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Count bound `(l+1)(2^n − 4) + 8` for the literal range, with `n+1`
/// in place of `n` when the boundary subspace is cleaned too.
pub fn count_bound(n: usize, l: usize, clean_boundary: bool) -> usize {
    let m = if clean_boundary { n + 1 } else { n };
    (l + 1) * ((1usize << m) - 4) + 8
}

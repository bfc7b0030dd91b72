use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::{require_mode, unit_data};
use crate::error::{Error, Result};
use crate::signal::{aggregate_scale, ConvMode, GridSignal, MeasurementSet, Normalization};

/// Multipliers with `m2 · k2 = m1 · k1 + 1`, `1 ≤ m1 ≤ k2`, `1 ≤ m2 ≤ k1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BezoutPlan {
    pub k1: usize,
    pub k2: usize,
    pub m1: usize,
    pub m2: usize,
}

impl BezoutPlan {
    /// The smaller aggregated window `K = m1 k1`; the larger is `K + 1`.
    pub fn window(&self) -> usize {
        self.m1 * self.k1
    }
}

/// Solves `m2 k2 = m1 k1 + 1` for coprime `k1 ≠ k2`.
///
/// When `k2 = 1` no solution has `m2 ≤ k1`, so the sizes are swapped and the
/// returned plan reports the relabelled pair.
pub fn bezout_plan(k1: usize, k2: usize) -> Result<BezoutPlan> {
    if k1 == 0 || k2 == 0 {
        return Err(Error::InvalidArgument("box sizes must be positive".into()));
    }
    let g = k1.gcd(&k2);
    if g != 1 {
        return Err(Error::NotCoprime { a: k1, b: k2, gcd: g });
    }
    if k1 == k2 {
        return Err(Error::InvalidArgument("box sizes must differ".into()));
    }
    if k2 == 1 {
        return bezout_plan(k2, k1);
    }
    let eg = (k1 as i64).extended_gcd(&(k2 as i64));
    let inverse = eg.x.rem_euclid(k2 as i64) as usize;
    // m1 ≡ −k1⁻¹ (mod k2), taken in 1..=k2.
    let m1 = match (k2 - inverse) % k2 {
        0 => k2,
        m => m,
    };
    let m2 = (m1 * k1 + 1) / k2;
    debug_assert_eq!(m2 * k2, m1 * k1 + 1);
    Ok(BezoutPlan { k1, k2, m1, m2 })
}

/// Relabelled pairwise-coprime triple with `k = m1 k1`, `k + 1 = m2 k2`,
/// `2k + 1 = m3 k3` and `k3` odd.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrtPlan {
    pub k1: usize,
    pub k2: usize,
    pub k3: usize,
    pub k: usize,
    pub m1: usize,
    pub m2: usize,
    pub m3: usize,
}

/// Smallest `k > 0` with `k ≡ 0 (mod k1)`, `k ≡ −1 (mod k2)`,
/// `2k ≡ −1 (mod k3)`, after relabelling so that `k3` is odd.
pub fn crt_plan(k1: usize, k2: usize, k3: usize) -> Result<CrtPlan> {
    let mut ks = [k1, k2, k3];
    if ks.contains(&0) {
        return Err(Error::InvalidArgument("box sizes must be positive".into()));
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let g = ks[i].gcd(&ks[j]);
        if g != 1 {
            return Err(Error::NotCoprime { a: ks[i], b: ks[j], gcd: g });
        }
    }
    if ks[2] % 2 == 0 {
        let swap = if ks[1] % 2 == 1 { 1 } else { 0 };
        ks.swap(2, swap);
    }
    let [k1, k2, k3] = ks;
    let product = k1 * k2 * k3;
    let k = (1..=k2 * k3)
        .map(|t| t * k1)
        .find(|&k| (k + 1) % k2 == 0 && (2 * k + 1) % k3 == 0)
        .expect("the congruences have a solution modulo k1·k2·k3");
    let plan = CrtPlan {
        k1,
        k2,
        k3,
        k,
        m1: k / k1,
        m2: (k + 1) / k2,
        m3: (2 * k + 1) / k3,
    };
    let largest = plan.m1.max(plan.m2).max(plan.m3);
    if largest > product {
        return Err(Error::Inconsistent(format!(
            "multiplier {largest} exceeds k1·k2·k3 = {product}"
        )));
    }
    Ok(plan)
}

/// A locally recovered signal covering `origin .. origin + shape` of the
/// source grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalRecovery {
    pub signal: GridSignal,
    pub origin: Vec<usize>,
}

/// Exact 1-D recovery `u(a) = y_{K+1}(a) − y_K(a+1)` from window sums at the
/// coprime sizes of `plan`, with `K = m1 k1` reached by aggregation.
///
/// `y1`, `y2` hold window sums at `plan.k1`, `plan.k2`. In cyclic mode every
/// sample is recovered. In valid mode the formula covers `0 .. n−K`; the
/// mirrored identity `u(a+K) = y_{K+1}(a) − y_K(a)` covers `K .. n`, so the
/// whole signal is recovered when `n ≥ 2K` and the prefix otherwise.
pub fn local_reconstruct_1d(
    y1: &GridSignal,
    y2: &GridSignal,
    plan: &BezoutPlan,
    mode: ConvMode,
) -> Result<LocalRecovery> {
    if y1.ndim() != 1 || y2.ndim() != 1 {
        return Err(Error::InvalidShape("local 1-D recovery needs 1-D measurements".into()));
    }
    let (n1, n2) = (y1.len(), y2.len());
    let n = match mode {
        ConvMode::Cyclic => n1,
        ConvMode::Valid => n1 + plan.k1 - 1,
        ConvMode::Full => {
            return Err(Error::InvalidArgument("local recovery supports cyclic and valid data".into()))
        }
    };
    if mode.output_len(n, plan.k2).ok() != Some(n2) {
        return Err(Error::Inconsistent(format!(
            "measurement lengths {n1}, {n2} do not fit box sizes {}, {}",
            plan.k1, plan.k2
        )));
    }
    let big_k = plan.window();
    if big_k + 1 > n {
        return Err(Error::KernelTooLarge { k: big_k + 1, n, mode });
    }
    let yk = aggregate_scale(y1, plan.k1, plan.m1, mode, Normalization::Unit)?;
    let yk1 = aggregate_scale(y2, plan.k2, plan.m2, mode, Normalization::Unit)?;
    let (yk, yk1) = (yk.values(), yk1.values());
    let values: Vec<f64> = match mode {
        ConvMode::Cyclic => (0..n).map(|a| yk1[a] - yk[(a + 1) % n]).collect(),
        _ => {
            let head = n - big_k;
            let mut out: Vec<f64> = (0..head).map(|a| yk1[a] - yk[a + 1]).collect();
            if n >= 2 * big_k {
                out.extend((head..n).map(|t| yk1[t - big_k] - yk[t - big_k]));
            }
            out
        }
    };
    Ok(LocalRecovery {
        signal: GridSignal::from_1d(values)?,
        origin: vec![0],
    })
}

/// Exact 2-D recovery from window sums at three pairwise-coprime sizes:
///
/// `u(a,b) = y_k(a+1, b−k) + y_k(a−k, b+1) + y_{k+1}(a, b) + y_{k+1}(a−k, b−k) − y_{2k+1}(a−k, b−k)`
///
/// with `k`, `k+1`, `2k+1` reached by aggregating the measured sizes. Cyclic
/// data recovers every pixel (indices mod n); valid data recovers the
/// interior `[k, n−k)` on each axis.
pub fn local_reconstruct_2d(ms: &MeasurementSet, plan: &CrtPlan) -> Result<LocalRecovery> {
    require_mode(ms, &[ConvMode::Cyclic, ConvMode::Valid], "local 2-D recovery")?;
    if ms.ndim() != 2 {
        return Err(Error::InvalidShape("local 2-D recovery needs 2-D data".into()));
    }
    let ms = unit_data(ms);
    let fetch = |kj: usize| {
        ms.get(kj)
            .ok_or_else(|| Error::InvalidArgument(format!("no measurement at box size {kj}")))
    };
    let k = plan.k;
    let (rows, cols) = (ms.source_shape()[0], ms.source_shape()[1]);
    if rows.min(cols) < 2 * k + 1 {
        return Err(Error::KernelTooLarge {
            k: 2 * k + 1,
            n: rows.min(cols),
            mode: ms.mode(),
        });
    }
    let agg = |kj, m| aggregate_scale(fetch(kj)?, kj, m, ms.mode(), Normalization::Unit);
    let ya = agg(plan.k1, plan.m1)?;
    let yb = agg(plan.k2, plan.m2)?;
    let yc = agg(plan.k3, plan.m3)?;
    let (k_i, n_r, n_c) = (k as isize, rows as isize, cols as isize);
    let cyclic = ms.mode() == ConvMode::Cyclic;
    let get = |y: &GridSignal, r: isize, c: isize| -> f64 {
        let w = y.shape()[1];
        let (r, c) = if cyclic {
            (r.rem_euclid(n_r) as usize, c.rem_euclid(n_c) as usize)
        } else {
            (r as usize, c as usize)
        };
        y.values()[r * w + c]
    };
    let pixel = |a: isize, b: isize| {
        get(&ya, a + 1, b - k_i) + get(&ya, a - k_i, b + 1) + get(&yb, a, b) + get(&yb, a - k_i, b - k_i)
            - get(&yc, a - k_i, b - k_i)
    };
    let (origin, out_r, out_c) = if cyclic {
        (0, rows, cols)
    } else {
        (k, rows - 2 * k, cols - 2 * k)
    };
    let signal = GridSignal::from_fn_2d(out_r, out_c, |i, j| pixel((i + origin) as isize, (j + origin) as isize))?;
    Ok(LocalRecovery {
        signal,
        origin: vec![origin, origin],
    })
}

/// Dispatches on dimension: 1-D uses the two smallest coprime sizes present,
/// 2-D the first pairwise-coprime triple.
pub fn local_reconstruct(ms: &MeasurementSet) -> Result<LocalRecovery> {
    let scales = ms.scales();
    match ms.ndim() {
        1 => {
            let (k1, k2) = scales
                .iter()
                .enumerate()
                .flat_map(|(i, &a)| scales[i + 1..].iter().map(move |&b| (a, b)))
                .find(|(a, b)| a.gcd(b) == 1)
                .ok_or_else(|| Error::InvalidArgument(format!("no coprime pair among {scales:?}")))?;
            let plan = bezout_plan(k1, k2)?;
            let unit = unit_data(ms);
            let y = |k| unit.get(k).expect("scale present");
            local_reconstruct_1d(y(plan.k1), y(plan.k2), &plan, ms.mode())
        }
        _ => {
            let s = scales.len();
            let triple = (0..s)
                .flat_map(|i| (i + 1..s).flat_map(move |j| (j + 1..s).map(move |l| (i, j, l))))
                .map(|(i, j, l)| (scales[i], scales[j], scales[l]))
                .find(|&(a, b, c)| a.gcd(&b) == 1 && a.gcd(&c) == 1 && b.gcd(&c) == 1)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("no pairwise-coprime triple among {scales:?}"))
                })?;
            let plan = crt_plan(triple.0, triple.1, triple.2)?;
            local_reconstruct_2d(ms, &plan)
        }
    }
}
